#include "m4sc/sharing/partition.hpp"

#include <cmath>
#include <string>

#include "m4sc/errors.hpp"
#include "m4sc/sharing/frame.hpp"

namespace m4sc::sharing {

void ComparatorConfig::validate() const {
  if (!(cosine_threshold > 0.0 && cosine_threshold <= 1.0)) {
    throw ConfigError("cosine threshold " + std::to_string(cosine_threshold) + " outside (0, 1]");
  }
  if (!(mean_tol >= 0.0) || !(var_tol >= 0.0)) {
    throw ConfigError("comparator tolerances must be non-negative");
  }
}

std::size_t Partition::public_token_count() const {
  std::size_t n = 0;
  for (const auto& g : public_groups) n += g.members.size();
  return n;
}

std::size_t Partition::private_token_count() const {
  std::size_t n = 0;
  for (const auto& p : private_tokens) n += p.size();
  return n;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double vector_mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double vector_variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double m = vector_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

bool comparator_accepts(std::span<const double> token, std::span<const double> centroid,
                        const ComparatorConfig& cfg) {
  return cosine_similarity(token, centroid) >= cfg.cosine_threshold &&
         std::abs(vector_mean(token) - vector_mean(centroid)) <= cfg.mean_tol &&
         std::abs(vector_variance(token) - vector_variance(centroid)) <= cfg.var_tol;
}

namespace {

struct Candidate {
  std::vector<TokenRef> members;
  std::vector<double> sum;
  std::vector<double> centroid;
  std::vector<bool> has_user;
};

}  // namespace

Partition compare_and_partition(std::span<const Matrix> tensors, const ComparatorConfig& cfg) {
  cfg.validate();
  if (tensors.empty()) throw ConfigError("compare_and_partition: no users");
  const std::size_t dim = tensors.front().cols();
  for (std::size_t u = 1; u < tensors.size(); ++u) {
    if (tensors[u].cols() != dim) {
      throw ShapeError("compare_and_partition: user 0 is " + tensors[0].shape_string() +
                       ", user " + std::to_string(u) + " is " + tensors[u].shape_string());
    }
  }
  const std::size_t users = tensors.size();

  std::vector<Candidate> candidates;
  for (std::size_t u = 0; u < users; ++u) {
    for (std::size_t t = 0; t < tensors[u].rows(); ++t) {
      const auto v = tensors[u].row(t);
      Candidate* home = nullptr;
      for (auto& c : candidates) {
        if (c.has_user[u]) continue;
        if (comparator_accepts(v, c.centroid, cfg)) {
          home = &c;
          break;
        }
      }
      if (!home) {
        candidates.push_back({{}, std::vector<double>(dim, 0.0), {}, std::vector<bool>(users)});
        home = &candidates.back();
      }
      home->members.push_back({u, t});
      home->has_user[u] = true;
      const double n = static_cast<double>(home->members.size());
      home->centroid.resize(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        home->sum[j] += v[j];
        home->centroid[j] = home->sum[j] / n;
      }
    }
  }

  Partition p;
  p.dim = dim;
  p.private_tokens.resize(users);
  for (const auto& m : tensors) p.token_counts.push_back(m.rows());
  std::vector<std::vector<bool>> is_public(users);
  for (std::size_t u = 0; u < users; ++u) is_public[u].assign(tensors[u].rows(), false);

  for (auto& c : candidates) {
    if (c.members.size() < 2) continue;  // one member per user, so ≥2 members ⇔ ≥2 users
    for (const auto& m : c.members) is_public[m.user][m.token] = true;
    p.public_groups.push_back({std::move(c.members), std::move(c.centroid)});
  }
  for (std::size_t u = 0; u < users; ++u) {
    for (std::size_t t = 0; t < tensors[u].rows(); ++t) {
      if (is_public[u][t]) continue;
      const auto row = tensors[u].row(t);
      p.private_tokens[u].push_back({t, {row.begin(), row.end()}});
    }
  }
  return p;
}

std::size_t SymbolAccount::payload_symbols() const {
  std::size_t n = public_symbols;
  for (std::size_t s : private_symbols) n += s;
  return n;
}

double SymbolAccount::savings_ratio() const {
  if (baseline_symbols == 0) return 0.0;
  return 1.0 - static_cast<double>(payload_symbols()) / static_cast<double>(baseline_symbols);
}

std::size_t SymbolAccount::transmitted_bytes() const {
  return payload_symbols() * kBytesPerSymbol + side_info_bytes;
}

SymbolAccount account(const Partition& partition, std::size_t channel_dim) {
  SymbolAccount a;
  a.public_symbols = partition.public_groups.size() * channel_dim;
  std::size_t index_entries = 0;
  for (std::size_t u = 0; u < partition.num_users(); ++u) {
    a.private_symbols.push_back(partition.private_tokens[u].size() * channel_dim);
    a.baseline_symbols += partition.token_counts[u] * channel_dim;
    index_entries += partition.token_counts[u];
  }
  a.side_info_bytes = kFrameHeaderBytes + kFrameChecksumBytes +
                      partition.num_users() * kUserHeaderBytes + index_entries * kIndexEntryBytes;
  return a;
}

}  // namespace m4sc::sharing
