#include "m4sc/semantic/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "m4sc/errors.hpp"

namespace m4sc::semantic {

namespace {

DenseLayer random_dense(std::size_t in, std::size_t out, Rng& rng) {
  DenseLayer l{Matrix(in, out), Matrix(1, out)};
  const double std = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& w : l.weight.flat()) w = rng.gaussian(0.0, std);
  return l;
}

void add_bias_rows(Matrix& m, const Matrix& bias) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias(0, j);
  }
}

// grads for W given G_W: base gradient and any adapters targeting `layer_id`.
void accumulate_weight_grad(const ModelView& view, std::size_t layer_id, const Matrix& g_w,
                            Matrix& base_grad, SemanticGrads& grads) {
  axpy(base_grad, g_w);
  const auto& adapters = view.adapters();
  for (std::size_t a = 0; a < adapters.size(); ++a) {
    const LoraAdapter& ad = *adapters[a];
    if (ad.target != layer_id) continue;
    const double s = ad.scale();
    axpy(grads.lora[a].down, matmul_nt(g_w, ad.up), s);
    axpy(grads.lora[a].up, matmul_tn(ad.down, g_w), s);
  }
}

}  // namespace

ToySemanticModel ToySemanticModel::create(std::size_t vocab_size, std::size_t dim,
                                          std::size_t layers, Rng& rng) {
  if (vocab_size == 0 || dim == 0) throw ConfigError("semantic model needs vocab and dim > 0");
  ToySemanticModel m;
  m.embedding = Matrix(vocab_size, dim);
  for (double& v : m.embedding.flat()) v = rng.gaussian();
  for (std::size_t i = 0; i < layers; ++i) m.encoder.push_back(random_dense(dim, dim, rng));
  m.head = random_dense(dim, vocab_size, rng);
  return m;
}

const DenseLayer& ToySemanticModel::layer(std::size_t id) const {
  if (id < encoder.size()) return encoder[id];
  if (id == encoder.size()) return head;
  throw ConfigError("layer id " + std::to_string(id) + " does not exist (model has " +
                    std::to_string(layer_count()) + " layers)");
}

DenseLayer& ToySemanticModel::layer(std::size_t id) {
  return const_cast<DenseLayer&>(std::as_const(*this).layer(id));
}

LoraAdapter LoraAdapter::create(const ToySemanticModel& model, std::size_t target,
                                std::size_t rank, double alpha, Rng& rng) {
  const DenseLayer& l = model.layer(target);
  const std::size_t max_rank = std::min(l.in_dim(), l.out_dim());
  if (rank == 0 || rank > max_rank) {
    throw ConfigError("LoRA rank " + std::to_string(rank) + " outside [1, " +
                      std::to_string(max_rank) + "] for layer " + std::to_string(target));
  }
  LoraAdapter a;
  a.target = target;
  a.rank = rank;
  a.alpha = alpha;
  a.down = Matrix(l.in_dim(), rank);
  a.up = Matrix(rank, l.out_dim());
  const double std = 1.0 / std::sqrt(static_cast<double>(l.in_dim()));
  for (double& v : a.down.flat()) v = rng.gaussian(0.0, std);
  return a;
}

ModelView::ModelView(const ToySemanticModel& base) : base_(&base) {
  for (std::size_t id = 0; id < base.layer_count(); ++id) weights_.push_back(base.layer(id).weight);
}

void ModelView::add(const LoraAdapter& adapter) {
  const DenseLayer& l = base_->layer(adapter.target);
  if (adapter.rank == 0 || adapter.down.rows() != l.in_dim() ||
      adapter.down.cols() != adapter.rank || adapter.up.rows() != adapter.rank ||
      adapter.up.cols() != l.out_dim()) {
    throw ConfigError("LoRA adapter " + adapter.down.shape_string() + " x " +
                      adapter.up.shape_string() + " does not fit layer " +
                      std::to_string(adapter.target) + " (" + l.weight.shape_string() + ")");
  }
  if (adapter.rank > std::min(l.in_dim(), l.out_dim())) {
    throw ConfigError("LoRA rank " + std::to_string(adapter.rank) + " exceeds layer dims");
  }
  adapters_.push_back(&adapter);
  axpy(weights_[adapter.target], matmul(adapter.down, adapter.up), adapter.scale());
}

const Matrix& ModelView::effective_weight(std::size_t layer_id) const {
  if (layer_id >= weights_.size()) {
    throw ConfigError("layer id " + std::to_string(layer_id) + " does not exist");
  }
  return weights_[layer_id];
}

ModelView apply_lora(const ToySemanticModel& model, const LoraAdapter& adapter, bool enabled) {
  return apply_lora(ModelView(model), adapter, enabled);
}

ModelView apply_lora(ModelView view, const LoraAdapter& adapter, bool enabled) {
  if (enabled) view.add(adapter);
  return view;
}

Matrix embed_text(const ToySemanticModel& model, std::span<const TokenId> tokens) {
  Matrix out(tokens.size(), model.dim());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= model.vocab_size()) {
      throw VocabularyError("token id " + std::to_string(tokens[i]) + " outside vocabulary of " +
                            std::to_string(model.vocab_size()));
    }
    const auto src = model.embedding.row(tokens[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix fuse_and_encode(const ModelView& view, const Matrix& vision, const Matrix& text,
                       EncoderCache* cache) {
  const std::size_t d = view.base().dim();
  if ((vision.rows() > 0 && vision.cols() != d) || (text.rows() > 0 && text.cols() != d)) {
    throw ShapeError("fuse_and_encode: vision " + vision.shape_string() + ", text " +
                     text.shape_string() + ", model dim " + std::to_string(d));
  }
  Matrix x = vconcat(vision, text);
  if (x.rows() == 0) x = Matrix(0, d);
  if (cache) {
    cache->inputs.clear();
    cache->outputs.clear();
  }
  const auto& layers = view.base().encoder;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix h = x.rows() ? matmul(x, view.effective_weight(l)) : Matrix(0, d);
    add_bias_rows(h, layers[l].bias);
    for (double& v : h.flat()) v = std::tanh(v);
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->outputs.push_back(h);
    }
    x = std::move(h);
  }
  if (cache && layers.empty()) cache->inputs.push_back(x);
  return x;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

Matrix decode(const ModelView& view, const Matrix& semantic, DecoderCache* cache) {
  const ToySemanticModel& m = view.base();
  if (semantic.rows() == 0) throw EmptyInputError("decode: semantic tensor has no tokens");
  if (semantic.cols() != m.dim()) {
    throw ShapeError("decode: semantic " + semantic.shape_string() + " vs head input dim " +
                     std::to_string(m.dim()));
  }
  Matrix pooled(1, m.dim());
  for (std::size_t i = 0; i < semantic.rows(); ++i) {
    const auto r = semantic.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) pooled(0, j) += r[j];
  }
  for (double& v : pooled.flat()) v /= static_cast<double>(semantic.rows());
  Matrix logits = matmul(pooled, view.effective_weight(m.encoder.size()));
  add_bias_rows(logits, m.head.bias);
  const auto p = softmax(logits.flat());
  Matrix probs(1, p.size(), p);
  if (cache) {
    cache->pooled = pooled;
    cache->probs = probs;
    cache->tokens = semantic.rows();
  }
  return probs;
}

SemanticGrads SemanticGrads::zeros_like(const ModelView& view) {
  const ToySemanticModel& m = view.base();
  SemanticGrads g;
  g.embedding = Matrix(m.embedding.rows(), m.embedding.cols());
  for (const auto& l : m.encoder) {
    g.encoder.push_back({Matrix(l.weight.rows(), l.weight.cols()), Matrix(1, l.bias.cols())});
  }
  g.head = {Matrix(m.head.weight.rows(), m.head.weight.cols()), Matrix(1, m.head.bias.cols())};
  for (const LoraAdapter* a : view.adapters()) {
    g.lora.push_back({Matrix(a->down.rows(), a->down.cols()), Matrix(a->up.rows(), a->up.cols())});
  }
  return g;
}

Matrix decode_backward(const ModelView& view, const DecoderCache& cache, const Matrix& dlogits,
                       SemanticGrads& grads) {
  if (cache.tokens == 0) throw StateError("decode_backward: no cached decode");
  const std::size_t head_id = view.base().encoder.size();
  accumulate_weight_grad(view, head_id, matmul_tn(cache.pooled, dlogits), grads.head.weight, grads);
  axpy(grads.head.bias, dlogits);
  const Matrix dpooled = matmul_nt(dlogits, view.effective_weight(head_id));
  Matrix out(cache.tokens, dpooled.cols());
  const double inv = 1.0 / static_cast<double>(cache.tokens);
  for (std::size_t i = 0; i < cache.tokens; ++i)
    for (std::size_t j = 0; j < dpooled.cols(); ++j) out(i, j) = dpooled(0, j) * inv;
  return out;
}

Matrix encode_backward(const ModelView& view, const EncoderCache& cache, const Matrix& upstream,
                       SemanticGrads& grads) {
  const auto& layers = view.base().encoder;
  if (cache.inputs.size() != std::max<std::size_t>(layers.size(), 1) ||
      cache.outputs.size() != layers.size()) {
    throw StateError("encode_backward: no cached encoder pass");
  }
  Matrix g = upstream;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Matrix& h = cache.outputs[l];
    require_same_shape(g, h, "encode_backward");
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double hv = h.flat()[i];
      g.flat()[i] *= (1.0 - hv * hv);
    }
    if (g.rows() == 0) continue;
    accumulate_weight_grad(view, l, matmul_tn(cache.inputs[l], g), grads.encoder[l].weight, grads);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      const auto r = g.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) grads.encoder[l].bias(0, j) += r[j];
    }
    g = matmul_nt(g, view.effective_weight(l));
  }
  return g;
}

void embed_backward(std::span<const TokenId> tokens, const Matrix& upstream, SemanticGrads& grads) {
  if (upstream.rows() != tokens.size()) {
    throw ShapeError("embed_backward: " + std::to_string(tokens.size()) + " tokens vs upstream " +
                     upstream.shape_string());
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto dst = grads.embedding.row(tokens[i]);
    const auto src = upstream.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
  }
}

}  // namespace m4sc::semantic
