#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "m4sc/binary_io.hpp"
#include "m4sc/kan/bspline.hpp"
#include "m4sc/numerics/matrix.hpp"
#include "m4sc/numerics/optim.hpp"
#include "m4sc/numerics/rng.hpp"

namespace m4sc::kan {

double silu(double x);
double silu_grad(double x);

/// One learnable activation: w_b·silu(x) + w_s·Σ_j c_j·B_j(x).
struct KanEdge {
  std::vector<double> coef;
  double base_weight = 0.0;
  double spline_weight = 1.0;
};

double edge_activate(const KanEdge& edge, const BSplineBasis& basis, double x);

/// Dense layer of n_in × n_out spline edges sharing one basis.
///
/// Storage: edge (p, q) lives at flat index e = p·n_out + q.
///   coef:          (n_in·n_out) × (G+k), row e holds c_0 … c_{G+k−1}
///   base_weight:   n_in × n_out
///   spline_weight: n_in × n_out
struct KanLayer {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  BSplineBasis basis = BSplineBasis::standard();
  Matrix coef;
  Matrix base_weight;
  Matrix spline_weight;

  KanLayer() = default;
  KanLayer(std::size_t n_in, std::size_t n_out, const BSplineBasis& basis);

  std::size_t edge_index(std::size_t p, std::size_t q) const { return p * n_out + q; }
  KanEdge edge(std::size_t p, std::size_t q) const;
  void set_edge(std::size_t p, std::size_t q, const KanEdge& e);

  friend bool operator==(const KanLayer&, const KanLayer&) = default;
};

struct KanLayerGrads {
  Matrix coef;
  Matrix base_weight;
  Matrix spline_weight;
};

struct KanGrads {
  std::vector<KanLayerGrads> layers;
  Matrix input;  ///< dL/d(input), same shape as the forward input

  std::vector<const Matrix*> list() const;
  std::vector<Matrix*> list();
};

/// Forward activations kept for the backward pass.
struct KanCache {
  std::vector<Matrix> layer_inputs;
  bool valid() const { return !layer_inputs.empty(); }
};

struct KanInit {
  double coef_std = 0.1;
  double spline_weight = 1.0;
};

class KanNetwork {
 public:
  KanNetwork() = default;
  explicit KanNetwork(std::vector<KanLayer> layers);

  /// Random network with layer widths `widths` (at least two entries).
  /// w_b ~ N(0, 1/√n_in), w_s = 1, c_j ~ N(0, 0.1).
  static KanNetwork create(const std::vector<std::size_t>& widths, Rng& rng,
                           const BSplineBasis& basis = BSplineBasis::standard(),
                           const KanInit& init = {});

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().n_in; }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().n_out; }
  std::size_t depth() const { return layers_.size(); }
  std::size_t parameter_count() const;

  const std::vector<KanLayer>& layers() const { return layers_; }
  std::vector<KanLayer>& layers() { return layers_; }

  /// Row-wise forward of an N × input_dim matrix. Fills `cache` if given.
  Matrix forward(const Matrix& input, KanCache* cache = nullptr) const;

  /// Gradients of a loss whose gradient w.r.t. the forward output is `upstream`.
  /// Throws StateError when the cache does not hold a matching forward pass.
  KanGrads backward(const KanCache& cache, const Matrix& upstream) const;

  KanGrads zero_grads() const;

  /// Trainable matrices in a fixed order: per layer coef, base_weight, spline_weight.
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;

  friend bool operator==(const KanNetwork&, const KanNetwork&) = default;

 private:
  void validate() const;
  std::vector<KanLayer> layers_;
};

/// Single-row forward. Throws ShapeError on input length mismatch.
std::vector<double> kan_forward(const KanNetwork& net, std::span<const double> input);

/// Versioned binary blob:
///   "KAN1" | u32 layer_count |
///   per layer: u32 n_in, u32 n_out, u32 order, u32 intervals, f64 grid_min, f64 grid_max |
///   per layer: coef f64 (edge-major, then basis index), base_weight f64 (edge order),
///              spline_weight f64 (edge order)
/// All integers and floats little-endian.
std::vector<std::uint8_t> save_kan(const KanNetwork& net);
KanNetwork load_kan(std::span<const std::uint8_t> blob);

void write_kan(ByteWriter& out, const KanNetwork& net);
KanNetwork read_kan(ByteReader& in);

struct FitConfig {
  AdamWConfig optim{1e-2, 0.9, 0.999, 1e-8, 0.0};
  double min_lr = 1e-4;
};

struct FitResult {
  double initial_mse = 0.0;
  double final_mse = 0.0;
};

/// Full-batch AdamW regression of a scalar-output network on (inputs, targets)
/// with a cosine schedule over `steps`. Zero steps leaves the network untouched.
FitResult fit_function(KanNetwork& net, const Matrix& inputs, std::span<const double> targets,
                       std::size_t steps, const FitConfig& cfg = {});

double network_mse(const KanNetwork& net, const Matrix& inputs, std::span<const double> targets);

}  // namespace m4sc::kan
