#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "m4sc/channel/channel.hpp"
#include "m4sc/errors.hpp"
#include "m4sc/numerics/grad_check.hpp"

using namespace m4sc;
using namespace m4sc::channel;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double std = 1.0) {
  Matrix m(r, c);
  for (double& v : m.flat()) v = rng.gaussian(0.0, std);
  return m;
}

ChannelParams params(Family f, double snr, std::uint64_t seed = 1) {
  ChannelParams p;
  p.family = f;
  p.snr_db = snr;
  p.seed = seed;
  return p;
}

}  // namespace

TEST(Channel, AwgnNoiseVarianceMatchesSnr) {
  const Matrix zeros(1000, 100);
  for (double snr : {0.0, 6.0, 12.0}) {
    const Matrix rx = transmit(params(Family::Awgn, snr, 17), zeros);
    double sum = 0.0, sq = 0.0;
    for (double v : rx.flat()) {
      sum += v;
      sq += v * v;
    }
    const double n = static_cast<double>(rx.size());
    const double var = sq / n - (sum / n) * (sum / n);
    const double want = std::pow(10.0, -snr / 10.0);
    EXPECT_NEAR(var / want, 1.0, 0.05) << snr << " dB";
    EXPECT_DOUBLE_EQ(snr_to_sigma(snr) * snr_to_sigma(snr), want);
  }
}

TEST(Channel, RayleighPowerGainIsUnitOnAverage) {
  Rng rng(5);
  const Matrix ones(100000, 1, 1.0);
  const auto r = transmit_with(params(Family::Rayleigh, 10.0), ones, rng);
  ASSERT_EQ(r.fade.size(), ones.rows());
  double h2 = 0.0;
  for (double h : r.fade) h2 += h * h;
  EXPECT_NEAR(h2 / r.fade.size(), 1.0, 0.05);
}

TEST(Channel, NoneIsIdentity) {
  Rng rng(1);
  const Matrix x = random_matrix(5, 4, rng);
  EXPECT_EQ(transmit(params(Family::None, -10.0), x), x);
}

TEST(Channel, InfiniteSnrIsNoiseless) {
  Rng rng(1);
  const Matrix x = random_matrix(5, 4, rng);
  EXPECT_EQ(transmit(params(Family::Awgn, std::numeric_limits<double>::infinity()), x), x);
}

TEST(Channel, SameSeedSameRealization) {
  Rng rng(1);
  const Matrix x = random_matrix(6, 3, rng);
  EXPECT_EQ(transmit(params(Family::Rayleigh, 3.0, 9), x),
            transmit(params(Family::Rayleigh, 3.0, 9), x));
  EXPECT_NE(transmit(params(Family::Rayleigh, 3.0, 9), x),
            transmit(params(Family::Rayleigh, 3.0, 10), x));
}

TEST(Channel, EqualizerFloorIsValidated) {
  ChannelParams p = params(Family::Rayleigh, 0.0);
  p.h_min = 0.0;
  EXPECT_THROW(transmit(p, Matrix(1, 1)), ConfigError);
  EXPECT_THROW(parse_family("fiber"), ConfigError);
  EXPECT_EQ(parse_family("awgn"), Family::Awgn);
  EXPECT_EQ(family_name(Family::Rayleigh), "rayleigh");
}

TEST(ChannelCoder, EncodeNormalizesPower) {
  Rng rng(2);
  const auto coder = ChannelCoder::create(8, 4, rng);
  const Matrix x = random_matrix(7, 8, rng, 3.0);
  const auto enc = channel_encode(coder, x);
  EXPECT_NEAR(mean_square(enc.symbols), 1.0, 1e-12);
  Matrix raw = matmul(x, coder.enc_weight);
  for (std::size_t i = 0; i < raw.rows(); ++i)
    for (std::size_t j = 0; j < raw.cols(); ++j) raw(i, j) += coder.enc_bias(0, j);
  EXPECT_NEAR(enc.scale, 1.0 / std::sqrt(mean_square(raw)), 1e-12);
}

TEST(ChannelCoder, ZeroInputKeepsUnitScale) {
  const auto coder = ChannelCoder::identity(4);
  const auto enc = channel_encode(coder, Matrix(3, 4));
  EXPECT_EQ(enc.scale, 1.0);
  EXPECT_EQ(enc.symbols, Matrix(3, 4));
}

TEST(ChannelCoder, IdentityRoundTripIsExactWithoutNoise) {
  Rng rng(3);
  const auto coder = ChannelCoder::identity(6);
  const Matrix x = random_matrix(4, 6, rng);
  const auto enc = channel_encode(coder, x);
  const Matrix back = channel_decode(coder, transmit(params(Family::None, 0.0), enc.symbols),
                                     enc.scale);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back.flat()[i], x.flat()[i], 1e-12);
}

TEST(ChannelCoder, ShapeMismatchThrows) {
  Rng rng(3);
  const auto coder = ChannelCoder::create(8, 4, rng);
  EXPECT_THROW(channel_encode(coder, Matrix(2, 7)), ShapeError);
  EXPECT_THROW(channel_decode(coder, Matrix(2, 5)), ShapeError);
}

TEST(ChannelPass, MatchesEncodeTransmitDecode) {
  Rng rng(4);
  const auto coder = ChannelCoder::create(8, 4, rng);
  const Matrix x = random_matrix(5, 8, rng);
  for (Family f : {Family::None, Family::Awgn, Family::Rayleigh}) {
    const auto p = params(f, 5.0, 33);
    Rng a(33);
    const Matrix via_pass = channel_pass(coder, p, a, x);
    const auto enc = channel_encode(coder, x);
    const Matrix via_steps = channel_decode(coder, transmit(p, enc.symbols), enc.scale);
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_NEAR(via_pass.flat()[i], via_steps.flat()[i], 1e-12);
    }
  }
}

TEST(ChannelPass, AnalyticGradientsMatchFiniteDifferences) {
  for (Family f : {Family::None, Family::Awgn, Family::Rayleigh}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(400 + seed);
      auto coder = ChannelCoder::create(5, 3, rng);
      for (double& v : coder.enc_bias.flat()) v = rng.gaussian(0.0, 0.2);
      for (double& v : coder.dec_bias.flat()) v = rng.gaussian(0.0, 0.2);
      Matrix x = random_matrix(4, 5, rng);
      const Matrix r = random_matrix(4, 5, rng);
      const auto p = params(f, 4.0);
      const std::uint64_t noise_seed = 77 + seed;
      auto loss = [&] {
        Rng noise(noise_seed);
        const Matrix y = channel_pass(coder, p, noise, x);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += y.flat()[i] * r.flat()[i];
        return s;
      };
      Rng noise(noise_seed);
      ChannelPassCache cache;
      channel_pass(coder, p, noise, x, &cache);
      auto grads = ChannelCoderGrads::zeros_like(coder);
      const Matrix dx = channel_pass_backward(coder, cache, r, grads);
      const auto gl = grads.list();
      std::vector<const Matrix*> analytic(gl.begin(), gl.end());
      EXPECT_LT(grad_check(loss, coder.parameters(), analytic).max_rel_error, 1e-5)
          << family_name(f) << " seed " << seed;
      EXPECT_LT(grad_check(loss, {&x}, {&dx}).max_rel_error, 1e-5)
          << family_name(f) << " seed " << seed;
    }
  }
}
