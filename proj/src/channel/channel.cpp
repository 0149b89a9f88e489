#include "m4sc/channel/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "m4sc/errors.hpp"

namespace m4sc::channel {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::None:
      return "none";
    case Family::Awgn:
      return "awgn";
    case Family::Rayleigh:
      return "rayleigh";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  if (name == "none") return Family::None;
  if (name == "awgn") return Family::Awgn;
  if (name == "rayleigh") return Family::Rayleigh;
  throw ConfigError("unknown channel family '" + std::string(name) + "'");
}

void ChannelParams::validate() const {
  if (!(h_min > 0.0)) throw ConfigError("channel h_min must be positive");
  if (std::isnan(snr_db)) throw ConfigError("channel snr_db is NaN");
}

double snr_to_sigma(double snr_db) { return std::pow(10.0, -snr_db / 20.0); }

ChannelCoder ChannelCoder::create(std::size_t dim, std::size_t channel_dim, Rng& rng) {
  if (dim == 0 || channel_dim == 0) throw ConfigError("channel coder dims must be positive");
  ChannelCoder c{Matrix(dim, channel_dim), Matrix(1, channel_dim), Matrix(channel_dim, dim),
                 Matrix(1, dim)};
  const double enc_std = 1.0 / std::sqrt(static_cast<double>(dim));
  const double dec_std = 1.0 / std::sqrt(static_cast<double>(channel_dim));
  for (double& w : c.enc_weight.flat()) w = rng.gaussian(0.0, enc_std);
  for (double& w : c.dec_weight.flat()) w = rng.gaussian(0.0, dec_std);
  return c;
}

ChannelCoder ChannelCoder::identity(std::size_t dim) {
  return {Matrix::identity(dim), Matrix(1, dim), Matrix::identity(dim), Matrix(1, dim)};
}

std::vector<Matrix*> ChannelCoder::parameters() {
  return {&enc_weight, &enc_bias, &dec_weight, &dec_bias};
}

std::vector<const Matrix*> ChannelCoder::parameters() const {
  return {&enc_weight, &enc_bias, &dec_weight, &dec_bias};
}

std::vector<Matrix*> ChannelCoderGrads::list() {
  return {&enc_weight, &enc_bias, &dec_weight, &dec_bias};
}

std::vector<const Matrix*> ChannelCoderGrads::list() const {
  return {&enc_weight, &enc_bias, &dec_weight, &dec_bias};
}

ChannelCoderGrads ChannelCoderGrads::zeros_like(const ChannelCoder& c) {
  return {Matrix(c.enc_weight.rows(), c.enc_weight.cols()), Matrix(1, c.enc_bias.cols()),
          Matrix(c.dec_weight.rows(), c.dec_weight.cols()), Matrix(1, c.dec_bias.cols())};
}

namespace {

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y = x.rows() ? matmul(x, w) : Matrix(0, w.cols());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto r = y.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b(0, j);
  }
  return y;
}

}  // namespace

EncodedSymbols channel_encode(const ChannelCoder& coder, const Matrix& semantic) {
  if (semantic.cols() != coder.dim()) {
    throw ShapeError("channel_encode: semantic " + semantic.shape_string() + " vs coder input dim " +
                     std::to_string(coder.dim()));
  }
  EncodedSymbols out{affine(semantic, coder.enc_weight, coder.enc_bias), 1.0};
  const double power = mean_square(out.symbols);
  if (power > 0.0) {
    out.scale = 1.0 / std::sqrt(power);
    for (double& v : out.symbols.flat()) v *= out.scale;
  }
  return out;
}

Realization transmit_with(const ChannelParams& params, const Matrix& symbols, Rng& rng) {
  params.validate();
  Realization r{symbols, std::vector<double>(symbols.rows(), 1.0), {}};
  if (params.family == Family::None) return r;
  const double sigma = std::isinf(params.snr_db) && params.snr_db > 0 ? 0.0
                                                                       : snr_to_sigma(params.snr_db);
  if (params.family == Family::Awgn) {
    for (double& v : r.received.flat()) v += sigma * rng.gaussian();
    return r;
  }
  r.fade.resize(symbols.rows());
  for (std::size_t t = 0; t < symbols.rows(); ++t) {
    const double g1 = rng.gaussian();
    const double g2 = rng.gaussian();
    const double h = std::sqrt(0.5 * (g1 * g1 + g2 * g2));
    const double eq = std::max(h, params.h_min);
    r.fade[t] = h;
    r.gain[t] = h / eq;
    auto row = r.received.row(t);
    for (double& v : row) v = (h * v + sigma * rng.gaussian()) / eq;
  }
  return r;
}

Matrix transmit(const ChannelParams& params, const Matrix& symbols) {
  Rng rng(params.seed);
  return transmit_with(params, symbols, rng).received;
}

Matrix channel_decode(const ChannelCoder& coder, const Matrix& received, double scale) {
  if (received.cols() != coder.channel_dim()) {
    throw ShapeError("channel_decode: received " + received.shape_string() +
                     " vs coder channel dim " + std::to_string(coder.channel_dim()));
  }
  if (!(scale > 0.0)) throw ConfigError("channel_decode: scale must be positive");
  Matrix u = received;
  if (scale != 1.0)
    for (double& v : u.flat()) v /= scale;
  return affine(u, coder.dec_weight, coder.dec_bias);
}

Matrix channel_pass(const ChannelCoder& coder, const ChannelParams& params, Rng& rng,
                    const Matrix& semantic, ChannelPassCache* cache) {
  if (semantic.cols() != coder.dim()) {
    throw ShapeError("channel_pass: semantic " + semantic.shape_string() + " vs coder input dim " +
                     std::to_string(coder.dim()));
  }
  Matrix a = affine(semantic, coder.enc_weight, coder.enc_bias);
  const double power = mean_square(a);
  const double scale = power > 0.0 ? 1.0 / std::sqrt(power) : 1.0;
  Matrix sent = a;
  for (double& v : sent.flat()) v *= scale;
  Realization r = transmit_with(params, sent, rng);
  Matrix u = r.received;
  for (double& v : u.flat()) v /= scale;
  Matrix out = affine(u, coder.dec_weight, coder.dec_bias);
  if (cache) {
    cache->input = semantic;
    cache->power = power;
    cache->scale = scale;
    cache->noise = r.received;
    for (std::size_t t = 0; t < sent.rows(); ++t) {
      auto nr = cache->noise.row(t);
      const auto sr = sent.row(t);
      for (std::size_t j = 0; j < nr.size(); ++j) nr[j] -= r.gain[t] * sr[j];
    }
    cache->affine = std::move(a);
    cache->gain = std::move(r.gain);
    cache->decoder_input = std::move(u);
  }
  return out;
}

Matrix channel_pass_backward(const ChannelCoder& coder, const ChannelPassCache& cache,
                             const Matrix& upstream, ChannelCoderGrads& grads) {
  if (cache.decoder_input.rows() != upstream.rows() || upstream.cols() != coder.dim()) {
    throw StateError("channel_pass_backward: no matching cached pass");
  }
  // out = u·W_dec + b_dec,  u = g ⊙ a + ε·√P  (ε fixed, P = mean(a²))
  if (upstream.rows() > 0) {
    axpy(grads.dec_weight, matmul_tn(cache.decoder_input, upstream));
    for (std::size_t i = 0; i < upstream.rows(); ++i)
      for (std::size_t j = 0; j < upstream.cols(); ++j) grads.dec_bias(0, j) += upstream(i, j);
  }
  const Matrix du = upstream.rows() ? matmul_nt(upstream, coder.dec_weight)
                                    : Matrix(0, coder.channel_dim());
  Matrix da(du.rows(), du.cols());
  double noise_dot = 0.0;
  for (std::size_t t = 0; t < du.rows(); ++t) {
    for (std::size_t j = 0; j < du.cols(); ++j) {
      da(t, j) = cache.gain[t] * du(t, j);
      noise_dot += du(t, j) * cache.noise(t, j);
    }
  }
  if (cache.power > 0.0 && noise_dot != 0.0) {
    // d(ε·√P)/da = ε · a / (N·√P)
    const double n = static_cast<double>(cache.affine.size());
    const double coeff = noise_dot / (n * std::sqrt(cache.power));
    axpy(da, cache.affine, coeff);
  }
  if (da.rows() > 0) {
    axpy(grads.enc_weight, matmul_tn(cache.input, da));
    for (std::size_t i = 0; i < da.rows(); ++i)
      for (std::size_t j = 0; j < da.cols(); ++j) grads.enc_bias(0, j) += da(i, j);
  }
  return da.rows() ? matmul_nt(da, coder.enc_weight) : Matrix(0, coder.dim());
}

}  // namespace m4sc::channel
