#include "m4sc/training/system.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "m4sc/binary_io.hpp"
#include "m4sc/errors.hpp"
#include "m4sc/json_fields.hpp"

namespace m4sc::training {

using semantic::Example;
using semantic::ModelView;

std::vector<std::size_t> SystemConfig::kan_widths() const {
  std::vector<std::size_t> w{vision_dim};
  w.insert(w.end(), kan_hidden.begin(), kan_hidden.end());
  w.push_back(dim);
  return w;
}

void SystemConfig::validate() const {
  if (vision_dim == 0 || dim == 0 || channel_dim == 0) {
    throw ConfigError("system dims must be positive (vision " + std::to_string(vision_dim) +
                      ", D " + std::to_string(dim) + ", D_ch " + std::to_string(channel_dim) + ")");
  }
  for (std::size_t h : kan_hidden) {
    if (h == 0) throw ConfigError("KAN hidden width must be positive");
  }
}

nlohmann::json to_json(const SystemConfig& c) {
  return {{"vision_dim", c.vision_dim},
          {"kan_hidden", c.kan_hidden},
          {"dim", c.dim},
          {"encoder_layers", c.encoder_layers},
          {"channel_dim", c.channel_dim},
          {"featurizer_seed", c.featurizer_seed},
          {"seed", c.seed}};
}

SystemConfig system_config_from_json(const nlohmann::json& j) {
  SystemConfig c;
  if (!j.is_object()) throw ConfigError("system config must be a JSON object");
  try {
    c.vision_dim = unsigned_value(j, "vision_dim", c.vision_dim);
    c.kan_hidden = unsigned_list(j, "kan_hidden", c.kan_hidden);
    c.dim = unsigned_value(j, "dim", c.dim);
    c.encoder_layers = unsigned_value(j, "encoder_layers", c.encoder_layers);
    c.channel_dim = unsigned_value(j, "channel_dim", c.channel_dim);
    c.featurizer_seed = unsigned_value(j, "featurizer_seed", c.featurizer_seed);
    c.seed = unsigned_value(j, "seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("system config: ") + e.what());
  }
  c.validate();
  return c;
}

System System::create(const SystemConfig& cfg) {
  cfg.validate();
  System s;
  s.config = cfg;
  s.featurizer = semantic::VisionFeaturizer(cfg.vision_dim, cfg.featurizer_seed);
  Rng kan_rng(derive_seed(cfg.seed, 1));
  s.kan = kan::KanNetwork::create(cfg.kan_widths(), kan_rng);
  Rng model_rng(derive_seed(cfg.seed, 2));
  s.model = semantic::ToySemanticModel::create(s.vocab.size(), cfg.dim, cfg.encoder_layers,
                                               model_rng);
  Rng coder_rng(derive_seed(cfg.seed, 3));
  s.coder = channel::ChannelCoder::create(cfg.dim, cfg.channel_dim, coder_rng);
  return s;
}

ModelView System::view() const {
  ModelView v(model);
  for (const auto& a : lora) v.add(a);
  return v;
}

void System::attach_lora(const LoraConfig& cfg) {
  std::vector<std::size_t> targets = cfg.targets;
  if (targets.empty()) {
    for (std::size_t id = 0; id < model.layer_count(); ++id) targets.push_back(id);
  }
  if (!lora.empty()) {
    bool same = lora.size() == targets.size();
    for (std::size_t i = 0; same && i < lora.size(); ++i) {
      same = lora[i].target == targets[i] && lora[i].rank == cfg.rank && lora[i].alpha == cfg.alpha;
    }
    if (!same) throw ConfigError("LoRA config does not match the adapters already attached");
    return;
  }
  Rng rng(derive_seed(config.seed, 4));
  for (std::size_t t : targets) {
    lora.push_back(semantic::LoraAdapter::create(model, t, cfg.rank, cfg.alpha, rng));
  }
}

bool System::has_phase(const std::string& name) const {
  return std::find(phases_done.begin(), phases_done.end(), name) != phases_done.end();
}

SystemGrads SystemGrads::zeros_like(const System& sys, const ModelView& view) {
  return {sys.kan.zero_grads(), semantic::SemanticGrads::zeros_like(view),
          channel::ChannelCoderGrads::zeros_like(sys.coder)};
}

namespace {

Matrix anchor_rows(const semantic::ToySemanticModel& model, const Example& ex) {
  Matrix a(ex.anchors.size(), model.dim());
  for (std::size_t r = 0; r < ex.anchors.size(); ++r) {
    const auto& ids = ex.anchors[r];
    if (ids.empty()) continue;
    for (semantic::TokenId id : ids) {
      const auto e = model.embedding.row(id);
      for (std::size_t j = 0; j < e.size(); ++j) a(r, j) += e[j];
    }
    for (double& v : a.row(r)) v /= static_cast<double>(ids.size());
  }
  return a;
}

Matrix slice_rows(const Matrix& m, std::size_t first, std::size_t count) {
  Matrix out(count, m.cols());
  for (std::size_t i = 0; i < count; ++i) {
    const auto src = m.row(first + i);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::size_t argmax(const Matrix& probs) {
  const auto f = probs.flat();
  return static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
}

}  // namespace

double batch_loss(const System& sys, const ModelView& view, std::span<const Example* const> batch,
                  const LossWeights& w, const ChannelChoice& channel, std::uint64_t noise_seed,
                  SystemGrads* grads) {
  if (batch.empty()) throw EmptyInputError("batch_loss: empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  // All vision rows of the batch go through the KAN as one matrix.
  std::size_t vision_rows = 0;
  for (const Example* ex : batch) vision_rows += ex->vision.rows();
  Matrix vision(vision_rows, sys.kan.input_dim());
  std::vector<std::size_t> offset(batch.size());
  for (std::size_t b = 0, at = 0; b < batch.size(); ++b) {
    offset[b] = at;
    const Matrix& v = batch[b]->vision;
    for (std::size_t i = 0; i < v.rows(); ++i) {
      std::copy(v.row(i).begin(), v.row(i).end(), vision.row(at + i).begin());
    }
    at += v.rows();
  }
  kan::KanCache kan_cache;
  const Matrix projected =
      vision_rows ? sys.kan.forward(vision, grads ? &kan_cache : nullptr) : Matrix(0, sys.config.dim);
  Matrix dprojected(projected.rows(), projected.cols());

  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Example& ex = *batch[b];
    const std::size_t nv = ex.vision.rows();
    const Matrix proj = slice_rows(projected, offset[b], nv);
    const Matrix text = semantic::embed_text(view.base(), ex.tokens);

    semantic::EncoderCache enc_cache;
    const Matrix encoded = semantic::fuse_and_encode(view, proj, text, &enc_cache);

    Matrix decoded;
    channel::ChannelPassCache ch_cache;
    if (channel) {
      Rng noise(derive_seed(noise_seed, b));
      decoded = channel::channel_pass(sys.coder, *channel, noise, encoded, &ch_cache);
    }
    const Matrix& semantic_out = channel ? decoded : encoded;

    semantic::DecoderCache dec_cache;
    const Matrix probs = semantic::decode(view, semantic_out, &dec_cache);
    double loss = -std::log(std::max(probs(0, ex.answer), 1e-300));

    Matrix anchors;
    if (w.align != 0.0 && nv > 0) {
      anchors = anchor_rows(view.base(), ex);
      loss += w.align * mse(proj, anchors);
    }
    if (channel && w.recon != 0.0) loss += w.recon * mse(decoded, encoded);
    total += loss;
    if (!grads) continue;

    Matrix dlogits = probs;
    dlogits(0, ex.answer) -= 1.0;
    for (double& v : dlogits.flat()) v *= inv_b;
    Matrix dsem = semantic::decode_backward(view, dec_cache, dlogits, grads->semantic);

    Matrix dencoded;
    if (channel) {
      if (w.recon != 0.0) {
        const double c = 2.0 * w.recon * inv_b / static_cast<double>(decoded.size());
        for (std::size_t i = 0; i < dsem.size(); ++i) {
          dsem.flat()[i] += c * (decoded.flat()[i] - encoded.flat()[i]);
        }
      }
      dencoded = channel::channel_pass_backward(sys.coder, ch_cache, dsem, grads->coder);
    } else {
      dencoded = std::move(dsem);
    }

    const Matrix dinput = semantic::encode_backward(view, enc_cache, dencoded, grads->semantic);
    semantic::embed_backward(ex.tokens, slice_rows(dinput, nv, ex.tokens.size()), grads->semantic);
    const double ca = nv ? 2.0 * w.align * inv_b / static_cast<double>(proj.size()) : 0.0;
    for (std::size_t i = 0; i < nv; ++i) {
      auto dst = dprojected.row(offset[b] + i);
      const auto src = dinput.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) {
        dst[j] = src[j];
        if (!anchors.empty()) dst[j] += ca * (proj(i, j) - anchors(i, j));
      }
    }
  }

  if (grads && vision_rows) {
    kan::KanGrads kg = sys.kan.backward(kan_cache, dprojected);
    for (std::size_t i = 0; i < kg.layers.size(); ++i) {
      axpy(grads->kan.layers[i].coef, kg.layers[i].coef);
      axpy(grads->kan.layers[i].base_weight, kg.layers[i].base_weight);
      axpy(grads->kan.layers[i].spline_weight, kg.layers[i].spline_weight);
    }
  }
  return total * inv_b;
}

Prediction predict(const System& sys, const ModelView& view, const Example& ex,
                   const ChannelChoice& channel, Rng* noise) {
  const Matrix proj =
      ex.vision.rows() ? sys.kan.forward(ex.vision) : Matrix(0, sys.config.dim);
  const Matrix encoded =
      semantic::fuse_and_encode(view, proj, semantic::embed_text(view.base(), ex.tokens));
  Prediction p;
  if (channel) {
    if (!noise) throw ConfigError("predict: channel evaluation needs a noise generator");
    const Matrix decoded = channel::channel_pass(sys.coder, *channel, *noise, encoded);
    p.semantic_mse = mse(decoded, encoded);
    p.probs = semantic::decode(view, decoded);
  } else {
    p.probs = semantic::decode(view, encoded);
  }
  p.answer = static_cast<semantic::TokenId>(argmax(p.probs));
  return p;
}

EvalResult evaluate(const System& sys, std::span<const Example> corpus, const ChannelChoice& channel,
                    std::span<const std::uint64_t> seeds) {
  EvalResult r;
  r.samples = corpus.size();
  if (corpus.empty() || seeds.empty()) return r;
  const ModelView view = sys.view();
  std::map<semantic::Task, std::pair<double, double>> per_task;  // hits, count
  double hits = 0.0;
  double sq = 0.0;
  for (std::uint64_t s : seeds) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      Rng noise(derive_seed(s, i));
      const Prediction p = predict(sys, view, corpus[i], channel, &noise);
      const double hit = p.answer == corpus[i].answer ? 1.0 : 0.0;
      hits += hit;
      sq += p.semantic_mse;
      auto& t = per_task[corpus[i].task];
      t.first += hit;
      t.second += 1.0;
    }
  }
  const double n = static_cast<double>(corpus.size() * seeds.size());
  r.accuracy = hits / n;
  r.semantic_mse = sq / n;
  for (const auto& [task, hc] : per_task) r.task_accuracy[task] = hc.first / hc.second;
  return r;
}

std::uint64_t tensor_hash(std::span<const Matrix* const> tensors) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const Matrix* m : tensors) {
    const std::uint64_t dims[2] = {m->rows(), m->cols()};
    mix(dims, sizeof(dims));
    mix(m->flat().data(), m->size() * sizeof(double));
  }
  return h;
}

namespace {

constexpr std::string_view kCheckpointMagic = "M4CK";
constexpr std::uint32_t kCheckpointVersion = 1;

void write_matrix(ByteWriter& w, const Matrix& m) {
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (double v : m.flat()) w.f64(v);
}

Matrix read_matrix(ByteReader& r) {
  const std::size_t rows = r.u32();
  const std::size_t cols = r.u32();
  if (rows * cols * 8 > r.remaining()) throw CorruptionError("checkpoint matrix exceeds blob size");
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = r.f64();
  return m;
}

void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw CorruptionError(std::string("checkpoint ") + what + " has shape " + m.shape_string());
  }
}

}  // namespace

std::vector<std::uint8_t> save_checkpoint(const System& sys) {
  ByteWriter w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  const std::string cfg = to_json(sys.config).dump();
  w.u32(static_cast<std::uint32_t>(cfg.size()));
  w.bytes(cfg);
  kan::write_kan(w, sys.kan);

  const auto& m = sys.model;
  write_matrix(w, m.embedding);
  w.u32(static_cast<std::uint32_t>(m.encoder.size()));
  for (const auto& l : m.encoder) {
    write_matrix(w, l.weight);
    write_matrix(w, l.bias);
  }
  write_matrix(w, m.head.weight);
  write_matrix(w, m.head.bias);
  w.u8(m.frozen.embedding);
  w.u8(m.frozen.encoder);
  w.u8(m.frozen.head);

  w.u32(static_cast<std::uint32_t>(sys.lora.size()));
  for (const auto& a : sys.lora) {
    w.u32(static_cast<std::uint32_t>(a.target));
    w.u32(static_cast<std::uint32_t>(a.rank));
    w.f64(a.alpha);
    write_matrix(w, a.down);
    write_matrix(w, a.up);
  }
  for (const Matrix* p : sys.coder.parameters()) write_matrix(w, *p);

  w.u32(static_cast<std::uint32_t>(sys.phases_done.size()));
  for (const auto& p : sys.phases_done) {
    w.u32(static_cast<std::uint32_t>(p.size()));
    w.bytes(p);
  }
  return w.take();
}

System load_checkpoint(std::span<const std::uint8_t> blob) {
  ByteReader r(blob);
  if (r.remaining() < 8 || r.bytes(4) != kCheckpointMagic) {
    throw CorruptionError("not a checkpoint (bad magic)");
  }
  if (const auto v = r.u32(); v != kCheckpointVersion) {
    throw CorruptionError("unsupported checkpoint version " + std::to_string(v));
  }
  const std::uint32_t cfg_len = r.u32();
  if (cfg_len > r.remaining()) throw CorruptionError("checkpoint config exceeds blob size");
  SystemConfig cfg;
  try {
    cfg = system_config_from_json(nlohmann::json::parse(r.bytes(cfg_len)));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("checkpoint config: ") + e.what());
  } catch (const ConfigError& e) {
    throw CorruptionError(std::string("checkpoint config: ") + e.what());
  }

  System s = System::create(cfg);
  s.kan = kan::read_kan(r);
  if (s.kan.input_dim() != cfg.vision_dim || s.kan.output_dim() != cfg.dim) {
    throw CorruptionError("checkpoint KAN dims do not match its config");
  }
  const std::size_t v = s.vocab.size();
  const std::size_t d = cfg.dim;
  auto& m = s.model;
  m.embedding = read_matrix(r);
  expect_shape(m.embedding, v, d, "embedding");
  const std::uint32_t layers = r.u32();
  if (layers != cfg.encoder_layers) throw CorruptionError("checkpoint encoder depth mismatch");
  for (auto& l : m.encoder) {
    l.weight = read_matrix(r);
    l.bias = read_matrix(r);
    expect_shape(l.weight, d, d, "encoder weight");
    expect_shape(l.bias, 1, d, "encoder bias");
  }
  m.head.weight = read_matrix(r);
  m.head.bias = read_matrix(r);
  expect_shape(m.head.weight, d, v, "head weight");
  expect_shape(m.head.bias, 1, v, "head bias");
  m.frozen.embedding = r.u8() != 0;
  m.frozen.encoder = r.u8() != 0;
  m.frozen.head = r.u8() != 0;

  const std::uint32_t adapters = r.u32();
  if (adapters > m.layer_count()) throw CorruptionError("checkpoint has too many adapters");
  for (std::uint32_t i = 0; i < adapters; ++i) {
    semantic::LoraAdapter a;
    a.target = r.u32();
    a.rank = r.u32();
    a.alpha = r.f64();
    a.down = read_matrix(r);
    a.up = read_matrix(r);
    if (a.target >= m.layer_count()) throw CorruptionError("checkpoint adapter targets no layer");
    const auto& l = m.layer(a.target);
    expect_shape(a.down, l.in_dim(), a.rank, "adapter down");
    expect_shape(a.up, a.rank, l.out_dim(), "adapter up");
    s.lora.push_back(std::move(a));
  }
  for (Matrix* p : s.coder.parameters()) {
    const std::size_t rows = p->rows(), cols = p->cols();
    *p = read_matrix(r);
    expect_shape(*p, rows, cols, "channel coder tensor");
  }
  const std::uint32_t phases = r.u32();
  for (std::uint32_t i = 0; i < phases; ++i) s.phases_done.push_back(r.bytes(r.u32()));
  if (r.remaining() != 0) throw CorruptionError("trailing bytes in checkpoint");
  return s;
}

}  // namespace m4sc::training
