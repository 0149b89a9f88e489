#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "m4sc/numerics/matrix.hpp"

namespace m4sc::sharing {

struct ComparatorConfig {
  double cosine_threshold = 0.9;
  double mean_tol = 0.1;
  double var_tol = 0.1;

  /// Throws ConfigError unless τ ∈ (0, 1] and both tolerances are ≥ 0.
  void validate() const;
};

struct TokenRef {
  std::size_t user = 0;
  std::size_t token = 0;
  friend bool operator==(const TokenRef&, const TokenRef&) = default;
  friend auto operator<=>(const TokenRef&, const TokenRef&) = default;
};

struct PublicGroup {
  std::vector<TokenRef> members;  ///< in join order (user-then-token)
  std::vector<double> centroid;   ///< element-wise mean of member vectors
  friend bool operator==(const PublicGroup&, const PublicGroup&) = default;
};

struct PrivateToken {
  std::size_t token = 0;
  std::vector<double> vector;
  friend bool operator==(const PrivateToken&, const PrivateToken&) = default;
};

struct Partition {
  std::size_t dim = 0;
  std::vector<std::size_t> token_counts;        ///< T_u per user
  std::vector<PublicGroup> public_groups;       ///< in creation order
  std::vector<std::vector<PrivateToken>> private_tokens;  ///< per user, ascending token index

  std::size_t num_users() const { return token_counts.size(); }
  std::size_t public_token_count() const;
  std::size_t private_token_count() const;
  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Scalar statistics used by the comparator gate.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double vector_mean(std::span<const double> v);
double vector_variance(std::span<const double> v);

/// True when `token` may join a group with centroid `centroid`:
/// cosine ≥ τ, |mean diff| ≤ mean_tol and |variance diff| ≤ var_tol.
bool comparator_accepts(std::span<const double> token, std::span<const double> centroid,
                        const ComparatorConfig& cfg);

/// Greedy first-fit clustering in user-then-token order.
///
/// Each token is tested against the running centroids of existing candidate
/// groups in creation order and joins the first one that accepts it and does
/// not already hold a token of the same user; otherwise it seeds a new
/// candidate. Candidates spanning at least two users become public groups;
/// members of every other candidate are private.
///
/// Throws ShapeError when users disagree on D, ConfigError for no users or a bad config.
Partition compare_and_partition(std::span<const Matrix> tensors, const ComparatorConfig& cfg);

struct SymbolAccount {
  std::size_t public_symbols = 0;
  std::vector<std::size_t> private_symbols;  ///< per user
  std::size_t side_info_bytes = 0;
  std::size_t baseline_symbols = 0;

  std::size_t payload_symbols() const;
  /// 1 − payload / baseline.
  double savings_ratio() const;
  /// payload·4 + side info, in bytes.
  std::size_t transmitted_bytes() const;
  std::size_t baseline_bytes() const { return baseline_symbols * kBytesPerSymbol; }

  static constexpr std::size_t kBytesPerSymbol = 4;
};

/// Symbol and side-information accounting for `partition` at D_ch symbols per token.
/// side_info_bytes equals the serialized frame size minus 4 bytes per payload
/// symbol: header, per-user block headers, index maps and the checksum.
SymbolAccount account(const Partition& partition, std::size_t channel_dim);

}  // namespace m4sc::sharing
