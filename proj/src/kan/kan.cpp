#include "m4sc/kan/kan.hpp"

#include <cmath>
#include <string>

#include "m4sc/errors.hpp"

namespace m4sc::kan {

namespace {
constexpr std::size_t kMaxLocal = 9;
constexpr char kMagic[] = "KAN1";
}  // namespace

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_grad(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

double edge_activate(const KanEdge& edge, const BSplineBasis& basis, double x) {
  if (edge.coef.size() != basis.num_basis()) {
    throw ShapeError("edge has " + std::to_string(edge.coef.size()) + " coefficients, basis has " +
                     std::to_string(basis.num_basis()));
  }
  double local[kMaxLocal];
  const std::size_t first = basis.eval_local(x, {local, basis.order() + 1}, {});
  double spline = 0.0;
  for (std::size_t r = 0; r <= basis.order(); ++r) spline += edge.coef[first + r] * local[r];
  return edge.base_weight * silu(x) + edge.spline_weight * spline;
}

KanLayer::KanLayer(std::size_t in, std::size_t out, const BSplineBasis& b)
    : n_in(in),
      n_out(out),
      basis(b),
      coef(in * out, b.num_basis()),
      base_weight(in, out),
      spline_weight(in, out, 1.0) {}

KanEdge KanLayer::edge(std::size_t p, std::size_t q) const {
  const auto row = coef.row(edge_index(p, q));
  return KanEdge{{row.begin(), row.end()}, base_weight(p, q), spline_weight(p, q)};
}

void KanLayer::set_edge(std::size_t p, std::size_t q, const KanEdge& e) {
  if (e.coef.size() != basis.num_basis()) {
    throw ShapeError("set_edge: " + std::to_string(e.coef.size()) + " coefficients, expected " +
                     std::to_string(basis.num_basis()));
  }
  auto row = coef.row(edge_index(p, q));
  std::copy(e.coef.begin(), e.coef.end(), row.begin());
  base_weight(p, q) = e.base_weight;
  spline_weight(p, q) = e.spline_weight;
}

std::vector<const Matrix*> KanGrads::list() const {
  std::vector<const Matrix*> out;
  for (const auto& l : layers) {
    out.push_back(&l.coef);
    out.push_back(&l.base_weight);
    out.push_back(&l.spline_weight);
  }
  return out;
}

std::vector<Matrix*> KanGrads::list() {
  std::vector<Matrix*> out;
  for (auto& l : layers) {
    out.push_back(&l.coef);
    out.push_back(&l.base_weight);
    out.push_back(&l.spline_weight);
  }
  return out;
}

KanNetwork::KanNetwork(std::vector<KanLayer> layers) : layers_(std::move(layers)) { validate(); }

void KanNetwork::validate() const {
  if (layers_.empty()) throw ConfigError("KAN network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.n_in == 0 || l.n_out == 0) throw ConfigError("KAN layer with zero width");
    if (l.coef.rows() != l.n_in * l.n_out || l.coef.cols() != l.basis.num_basis() ||
        l.base_weight.rows() != l.n_in || l.base_weight.cols() != l.n_out ||
        !l.spline_weight.same_shape(l.base_weight)) {
      throw ShapeError("KAN layer " + std::to_string(i) + " storage does not match " +
                       std::to_string(l.n_in) + "x" + std::to_string(l.n_out));
    }
    if (i + 1 < layers_.size() && l.n_out != layers_[i + 1].n_in) {
      throw ShapeError("KAN layer " + std::to_string(i) + " outputs " + std::to_string(l.n_out) +
                       " but layer " + std::to_string(i + 1) + " expects " +
                       std::to_string(layers_[i + 1].n_in));
    }
  }
}

KanNetwork KanNetwork::create(const std::vector<std::size_t>& widths, Rng& rng,
                              const BSplineBasis& basis, const KanInit& init) {
  if (widths.size() < 2) throw ConfigError("KAN needs at least input and output widths");
  std::vector<KanLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    KanLayer layer(widths[i], widths[i + 1], basis);
    const double base_std = 1.0 / std::sqrt(static_cast<double>(widths[i]));
    for (double& w : layer.base_weight.flat()) w = rng.gaussian(0.0, base_std);
    layer.spline_weight.fill(init.spline_weight);
    for (double& c : layer.coef.flat()) c = rng.gaussian(0.0, init.coef_std);
    layers.push_back(std::move(layer));
  }
  return KanNetwork(std::move(layers));
}

std::size_t KanNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.coef.size() + l.base_weight.size() + l.spline_weight.size();
  return n;
}

namespace {

Matrix layer_forward(const KanLayer& layer, const Matrix& x) {
  const std::size_t k1 = layer.basis.order() + 1;
  Matrix y(x.rows(), layer.n_out);
  double local[kMaxLocal];
  for (std::size_t n = 0; n < x.rows(); ++n) {
    double* out = y.row(n).data();
    for (std::size_t p = 0; p < layer.n_in; ++p) {
      const double xv = x(n, p);
      const std::size_t first = layer.basis.eval_local(xv, {local, k1}, {});
      const double base = silu(xv);
      const double* wb = layer.base_weight.row(p).data();
      const double* ws = layer.spline_weight.row(p).data();
      for (std::size_t q = 0; q < layer.n_out; ++q) {
        const double* c = layer.coef.row(layer.edge_index(p, q)).data() + first;
        double s = 0.0;
        for (std::size_t r = 0; r < k1; ++r) s += c[r] * local[r];
        out[q] += wb[q] * base + ws[q] * s;
      }
    }
  }
  return y;
}

}  // namespace

Matrix KanNetwork::forward(const Matrix& input, KanCache* cache) const {
  if (input.cols() != input_dim()) {
    throw ShapeError("kan_forward: input " + input.shape_string() + " vs network input dim " +
                     std::to_string(input_dim()));
  }
  if (cache) cache->layer_inputs.clear();
  Matrix x = input;
  for (const auto& layer : layers_) {
    Matrix y = layer_forward(layer, x);
    if (cache) cache->layer_inputs.push_back(std::move(x));
    x = std::move(y);
  }
  if (!x.all_finite()) throw EvaluationError("kan_forward: non-finite output");
  return x;
}

KanGrads KanNetwork::zero_grads() const {
  KanGrads g;
  for (const auto& l : layers_) {
    g.layers.push_back({Matrix(l.coef.rows(), l.coef.cols()),
                        Matrix(l.base_weight.rows(), l.base_weight.cols()),
                        Matrix(l.spline_weight.rows(), l.spline_weight.cols())});
  }
  return g;
}

KanGrads KanNetwork::backward(const KanCache& cache, const Matrix& upstream) const {
  if (!cache.valid() || cache.layer_inputs.size() != layers_.size() ||
      cache.layer_inputs.front().rows() != upstream.rows()) {
    throw StateError("kan_backward: no cached forward pass for this input");
  }
  if (upstream.cols() != output_dim()) {
    throw ShapeError("kan_backward: upstream " + upstream.shape_string() + " vs output dim " +
                     std::to_string(output_dim()));
  }
  KanGrads grads = zero_grads();
  Matrix g_out = upstream;
  double local[kMaxLocal];
  double dlocal[kMaxLocal];
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const KanLayer& layer = layers_[li];
    const Matrix& x = cache.layer_inputs[li];
    KanLayerGrads& lg = grads.layers[li];
    const std::size_t k1 = layer.basis.order() + 1;
    Matrix g_in(x.rows(), layer.n_in);
    for (std::size_t n = 0; n < x.rows(); ++n) {
      const double* go = g_out.row(n).data();
      for (std::size_t p = 0; p < layer.n_in; ++p) {
        const double xv = x(n, p);
        const std::size_t first = layer.basis.eval_local(xv, {local, k1}, {dlocal, k1});
        const bool live = layer.basis.inside(xv);
        const double base = silu(xv);
        const double dbase = silu_grad(xv);
        const double* wb = layer.base_weight.row(p).data();
        const double* ws = layer.spline_weight.row(p).data();
        double* gwb = lg.base_weight.row(p).data();
        double* gws = lg.spline_weight.row(p).data();
        double gx = 0.0;
        for (std::size_t q = 0; q < layer.n_out; ++q) {
          const double g = go[q];
          if (g == 0.0) continue;
          const std::size_t e = layer.edge_index(p, q);
          const double* c = layer.coef.row(e).data() + first;
          double* gc = lg.coef.row(e).data() + first;
          double s = 0.0;
          double ds = 0.0;
          for (std::size_t r = 0; r < k1; ++r) {
            s += c[r] * local[r];
            ds += c[r] * dlocal[r];
            gc[r] += g * ws[q] * local[r];
          }
          gwb[q] += g * base;
          gws[q] += g * s;
          gx += g * (wb[q] * dbase + (live ? ws[q] * ds : 0.0));
        }
        g_in(n, p) = gx;
      }
    }
    g_out = std::move(g_in);
  }
  grads.input = std::move(g_out);
  return grads;
}

std::vector<Matrix*> KanNetwork::parameters() {
  std::vector<Matrix*> out;
  for (auto& l : layers_) {
    out.push_back(&l.coef);
    out.push_back(&l.base_weight);
    out.push_back(&l.spline_weight);
  }
  return out;
}

std::vector<const Matrix*> KanNetwork::parameters() const {
  std::vector<const Matrix*> out;
  for (const auto& l : layers_) {
    out.push_back(&l.coef);
    out.push_back(&l.base_weight);
    out.push_back(&l.spline_weight);
  }
  return out;
}

std::vector<double> kan_forward(const KanNetwork& net, std::span<const double> input) {
  if (input.size() != net.input_dim()) {
    throw ShapeError("kan_forward: input length " + std::to_string(input.size()) +
                     " vs network input dim " + std::to_string(net.input_dim()));
  }
  Matrix x(1, input.size(), std::vector<double>(input.begin(), input.end()));
  const Matrix y = net.forward(x);
  return {y.flat().begin(), y.flat().end()};
}

void write_kan(ByteWriter& out, const KanNetwork& net) {
  out.bytes(std::string_view(kMagic, 4));
  out.u32(static_cast<std::uint32_t>(net.depth()));
  for (const auto& l : net.layers()) {
    out.u32(static_cast<std::uint32_t>(l.n_in));
    out.u32(static_cast<std::uint32_t>(l.n_out));
    out.u32(static_cast<std::uint32_t>(l.basis.order()));
    out.u32(static_cast<std::uint32_t>(l.basis.grid_intervals()));
    out.f64(l.basis.grid_min());
    out.f64(l.basis.grid_max());
  }
  for (const auto& l : net.layers()) {
    for (double v : l.coef.flat()) out.f64(v);
    for (double v : l.base_weight.flat()) out.f64(v);
    for (double v : l.spline_weight.flat()) out.f64(v);
  }
}

KanNetwork read_kan(ByteReader& in) {
  if (in.bytes(4) != std::string_view(kMagic, 4)) throw CorruptionError("not a KAN1 blob");
  const std::uint32_t depth = in.u32();
  if (depth == 0 || depth > 64) throw CorruptionError("implausible KAN depth " + std::to_string(depth));
  std::vector<KanLayer> layers;
  for (std::uint32_t i = 0; i < depth; ++i) {
    const std::uint32_t n_in = in.u32();
    const std::uint32_t n_out = in.u32();
    const std::uint32_t order = in.u32();
    const std::uint32_t intervals = in.u32();
    const double lo = in.f64();
    const double hi = in.f64();
    const std::uint64_t edges = std::uint64_t{n_in} * n_out;
    if (edges == 0 || edges * (intervals + order + 2) * 8 > in.remaining()) {
      throw CorruptionError("KAN layer " + std::to_string(i) + " dims exceed blob size");
    }
    layers.emplace_back(n_in, n_out, BSplineBasis(order, intervals, lo, hi));
  }
  for (auto& l : layers) {
    for (double& v : l.coef.flat()) v = in.f64();
    for (double& v : l.base_weight.flat()) v = in.f64();
    for (double& v : l.spline_weight.flat()) v = in.f64();
  }
  return KanNetwork(std::move(layers));
}

std::vector<std::uint8_t> save_kan(const KanNetwork& net) {
  ByteWriter w;
  write_kan(w, net);
  return w.take();
}

KanNetwork load_kan(std::span<const std::uint8_t> blob) {
  ByteReader r(blob);
  KanNetwork net = read_kan(r);
  if (r.remaining() != 0) throw CorruptionError("trailing bytes after KAN blob");
  return net;
}

double network_mse(const KanNetwork& net, const Matrix& inputs, std::span<const double> targets) {
  const Matrix pred = net.forward(inputs);
  double s = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double d = pred(i, 0) - targets[i];
    s += d * d;
  }
  return s / static_cast<double>(targets.size());
}

FitResult fit_function(KanNetwork& net, const Matrix& inputs, std::span<const double> targets,
                       std::size_t steps, const FitConfig& cfg) {
  if (net.output_dim() != 1) throw ShapeError("fit_function: network must have one output");
  if (inputs.rows() != targets.size() || inputs.rows() == 0) {
    throw ShapeError("fit_function: " + inputs.shape_string() + " inputs vs " +
                     std::to_string(targets.size()) + " targets");
  }
  FitResult result;
  result.initial_mse = network_mse(net, inputs, targets);
  result.final_mse = result.initial_mse;
  if (steps == 0) return result;

  const auto params = net.parameters();
  std::vector<AdamWState> states;
  for (const Matrix* p : params) states.emplace_back(cfg.optim, p->rows(), p->cols());
  const CosineSchedule sched =
      CosineSchedule::with_default_warmup(cfg.optim.lr, steps, cfg.min_lr);
  const double n = static_cast<double>(targets.size());

  KanCache cache;
  for (std::size_t step = 0; step < steps; ++step) {
    const Matrix pred = net.forward(inputs, &cache);
    Matrix upstream(pred.rows(), 1);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      upstream(i, 0) = 2.0 * (pred(i, 0) - targets[i]) / n;
    }
    KanGrads grads = net.backward(cache, upstream);
    const auto glist = grads.list();
    const double lr = cosine_lr(sched, step + 1);
    for (std::size_t i = 0; i < params.size(); ++i) {
      states[i].cfg.lr = lr;
      adamw_step(states[i], *params[i], *glist[i]);
    }
  }
  result.final_mse = network_mse(net, inputs, targets);
  return result;
}

}  // namespace m4sc::kan
