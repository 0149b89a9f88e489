#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "m4sc/numerics/matrix.hpp"
#include "m4sc/numerics/rng.hpp"

namespace m4sc::channel {

enum class Family { None, Awgn, Rayleigh };

std::string_view family_name(Family f);
/// Throws ConfigError on an unknown name.
Family parse_family(std::string_view name);

struct ChannelParams {
  Family family = Family::None;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  double h_min = 1e-3;

  /// Throws ConfigError unless h_min > 0.
  void validate() const;
};

/// Noise standard deviation for unit signal power: 10^(−snr_db/20).
double snr_to_sigma(double snr_db);

/// Linear channel encoder D → D_ch and its mirror decoder D_ch → D.
struct ChannelCoder {
  Matrix enc_weight;  ///< D × D_ch
  Matrix enc_bias;    ///< 1 × D_ch
  Matrix dec_weight;  ///< D_ch × D
  Matrix dec_bias;    ///< 1 × D

  static ChannelCoder create(std::size_t dim, std::size_t channel_dim, Rng& rng);
  /// Identity encoder and decoder (dim == channel_dim), zero biases.
  static ChannelCoder identity(std::size_t dim);

  std::size_t dim() const { return enc_weight.rows(); }
  std::size_t channel_dim() const { return enc_weight.cols(); }

  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;

  friend bool operator==(const ChannelCoder&, const ChannelCoder&) = default;
};

/// Power-normalized symbols plus the factor applied: symbols = scale · (x·W + b).
/// An all-zero affine output is passed through with scale 1.
struct EncodedSymbols {
  Matrix symbols;
  double scale = 1.0;
};

EncodedSymbols channel_encode(const ChannelCoder& coder, const Matrix& semantic);

/// Applies the channel once with a generator seeded from params.seed.
Matrix transmit(const ChannelParams& params, const Matrix& symbols);

/// Per-token equalized gain g and the additive noise term ε such that
/// received = g ⊙ sent + ε (g = 1 for none/awgn, h / max(h, h_min) for rayleigh).
struct Realization {
  Matrix received;
  std::vector<double> gain;
  std::vector<double> fade;  ///< raw Rayleigh magnitude h per token (empty otherwise)
};

/// Draw order for rayleigh: per token, two Gaussians for h = √((g₁² + g₂²)/2),
/// then one Gaussian per symbol of that token. For awgn: one Gaussian per
/// symbol in row-major order. `none` draws nothing.
Realization transmit_with(const ChannelParams& params, const Matrix& symbols, Rng& rng);

/// (received / scale)·W_dec + b_dec. Throws ShapeError on a D_ch mismatch.
Matrix channel_decode(const ChannelCoder& coder, const Matrix& received, double scale = 1.0);

/// State kept by channel_pass for its backward pass.
struct ChannelPassCache {
  Matrix input;
  Matrix affine;   ///< x·W_enc + b_enc
  double power = 0.0;
  double scale = 1.0;
  std::vector<double> gain;
  Matrix noise;    ///< received − gain ⊙ symbols
  Matrix decoder_input;  ///< received / scale
};

struct ChannelCoderGrads {
  Matrix enc_weight;
  Matrix enc_bias;
  Matrix dec_weight;
  Matrix dec_bias;

  std::vector<Matrix*> list();
  std::vector<const Matrix*> list() const;
  static ChannelCoderGrads zeros_like(const ChannelCoder& coder);
};

/// channel_encode → transmit_with → channel_decode as one differentiable map.
Matrix channel_pass(const ChannelCoder& coder, const ChannelParams& params, Rng& rng,
                    const Matrix& semantic, ChannelPassCache* cache = nullptr);

/// Accumulates coder gradients and returns dL/d(semantic). The noise realization
/// is held fixed; the normalization factor is differentiated through.
Matrix channel_pass_backward(const ChannelCoder& coder, const ChannelPassCache& cache,
                             const Matrix& upstream, ChannelCoderGrads& grads);

}  // namespace m4sc::channel
