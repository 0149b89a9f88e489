#pragma once

#include <span>
#include <vector>

#include "m4sc/numerics/matrix.hpp"
#include "m4sc/numerics/rng.hpp"
#include "m4sc/semantic/vocab.hpp"

namespace m4sc::semantic {

/// y = x·W + b with W stored d_in × d_out and b as 1 × d_out.
struct DenseLayer {
  Matrix weight;
  Matrix bias;

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct FreezePolicy {
  bool embedding = false;
  bool encoder = false;
  bool head = false;

  static FreezePolicy all() { return {true, true, true}; }
  bool any() const { return embedding || encoder || head; }
  friend bool operator==(const FreezePolicy&, const FreezePolicy&) = default;
};

/// Desk-scale stand-in for the LLM: embedding table, a row-wise tanh
/// feed-forward encoder stack, and a mean-pool → linear → softmax head.
///
/// Layer ids used by LoRA: 0 … L−1 address encoder layers, L addresses the head.
struct ToySemanticModel {
  Matrix embedding;  ///< vocab × D
  std::vector<DenseLayer> encoder;
  DenseLayer head;  ///< D × vocab
  FreezePolicy frozen;

  static ToySemanticModel create(std::size_t vocab_size, std::size_t dim, std::size_t layers,
                                 Rng& rng);

  std::size_t dim() const { return embedding.cols(); }
  std::size_t vocab_size() const { return embedding.rows(); }
  std::size_t layer_count() const { return encoder.size() + 1; }
  const DenseLayer& layer(std::size_t id) const;
  DenseLayer& layer(std::size_t id);

  friend bool operator==(const ToySemanticModel&, const ToySemanticModel&) = default;
};

/// Low-rank additive update W + (α/r)·A·B on one layer; A is d_in × r
/// ("down"), B is r × d_out ("up").
struct LoraAdapter {
  std::size_t target = 0;
  std::size_t rank = 1;
  Matrix down;
  Matrix up;
  double alpha = 1.0;

  /// A ~ N(0, 1/√d_in), B = 0. Throws ConfigError for a missing target layer,
  /// rank 0, or rank above min(d_in, d_out).
  static LoraAdapter create(const ToySemanticModel& model, std::size_t target, std::size_t rank,
                            double alpha, Rng& rng);

  double scale() const { return alpha / static_cast<double>(rank); }
  friend bool operator==(const LoraAdapter&, const LoraAdapter&) = default;
};

/// Read-only view of a model with zero or more adapters applied.
///
/// Effective weights are materialized when the view is built or an adapter is
/// added; rebuild the view after mutating the model or its adapters.
class ModelView {
 public:
  explicit ModelView(const ToySemanticModel& base);

  const ToySemanticModel& base() const { return *base_; }
  const std::vector<const LoraAdapter*>& adapters() const { return adapters_; }
  void add(const LoraAdapter& adapter);

  /// Base weight plus every adapter's scaled update for that layer.
  const Matrix& effective_weight(std::size_t layer_id) const;

 private:
  const ToySemanticModel* base_;
  std::vector<const LoraAdapter*> adapters_;
  std::vector<Matrix> weights_;
};

/// View over `model` with `adapter` applied when `enabled`.
/// Throws ConfigError when the adapter does not fit the target layer.
ModelView apply_lora(const ToySemanticModel& model, const LoraAdapter& adapter, bool enabled);
ModelView apply_lora(ModelView view, const LoraAdapter& adapter, bool enabled);

/// One row per token. Throws VocabularyError for ids outside the table.
Matrix embed_text(const ToySemanticModel& model, std::span<const TokenId> tokens);

struct EncoderCache {
  std::vector<Matrix> inputs;   ///< input to each layer; inputs[0] is the fused tensor
  std::vector<Matrix> outputs;  ///< tanh output of each layer
};

/// Vision rows first, then text rows, through the encoder stack row by row.
/// Throws ShapeError when the two tensors disagree on D.
Matrix fuse_and_encode(const ModelView& view, const Matrix& vision, const Matrix& text,
                       EncoderCache* cache = nullptr);

struct DecoderCache {
  Matrix pooled;  ///< 1 × D
  Matrix probs;   ///< 1 × vocab
  std::size_t tokens = 0;
};

/// Mean-pool the tokens, apply the head, softmax. Returns 1 × vocab.
/// Throws EmptyInputError for a tensor with no tokens.
Matrix decode(const ModelView& view, const Matrix& semantic, DecoderCache* cache = nullptr);

std::vector<double> softmax(std::span<const double> logits);

struct DenseGrads {
  Matrix weight;
  Matrix bias;
};

struct LoraGrads {
  Matrix down;
  Matrix up;
};

/// Gradients for every model tensor plus one entry per adapter in the view.
struct SemanticGrads {
  Matrix embedding;
  std::vector<DenseGrads> encoder;
  DenseGrads head;
  std::vector<LoraGrads> lora;

  static SemanticGrads zeros_like(const ModelView& view);
};

/// Backprop through decode; `dlogits` is dL/dlogits (1 × vocab).
/// Returns dL/dsemantic (T × D) and accumulates head (and head-adapter) grads.
Matrix decode_backward(const ModelView& view, const DecoderCache& cache, const Matrix& dlogits,
                       SemanticGrads& grads);

/// Backprop through the encoder stack. Returns dL/d(fused input).
Matrix encode_backward(const ModelView& view, const EncoderCache& cache, const Matrix& upstream,
                       SemanticGrads& grads);

/// Scatter-adds text-row gradients into the embedding gradient.
void embed_backward(std::span<const TokenId> tokens, const Matrix& upstream, SemanticGrads& grads);

}  // namespace m4sc::semantic
