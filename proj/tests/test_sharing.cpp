#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>

#include "m4sc/errors.hpp"
#include "m4sc/sharing/frame.hpp"
#include "m4sc/sharing/partition.hpp"

using namespace m4sc;
using namespace m4sc::sharing;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double std = 1.0) {
  Matrix m(r, c);
  for (double& v : m.flat()) v = rng.gaussian(0.0, std);
  return m;
}

// Independent reference for the greedy clustering: candidate groups are kept
// as member lists and every centroid is recomputed from scratch.
Partition greedy_oracle(const std::vector<Matrix>& users, const ComparatorConfig& cfg) {
  const std::size_t d = users[0].cols();
  std::vector<std::vector<TokenRef>> groups;
  auto centroid = [&](const std::vector<TokenRef>& g) {
    std::vector<double> c(d, 0.0);
    for (const auto& m : g)
      for (std::size_t j = 0; j < d; ++j) c[j] += users[m.user](m.token, j);
    for (double& v : c) v /= static_cast<double>(g.size());
    return c;
  };
  for (std::size_t u = 0; u < users.size(); ++u) {
    for (std::size_t t = 0; t < users[u].rows(); ++t) {
      bool placed = false;
      for (auto& g : groups) {
        const bool has_user = std::any_of(g.begin(), g.end(), [&](auto& m) { return m.user == u; });
        if (has_user) continue;
        const auto c = centroid(g);
        if (comparator_accepts(users[u].row(t), c, cfg)) {
          g.push_back({u, t});
          placed = true;
          break;
        }
      }
      if (!placed) groups.push_back({{u, t}});
    }
  }
  Partition p;
  p.dim = d;
  p.private_tokens.resize(users.size());
  for (const auto& m : users) p.token_counts.push_back(m.rows());
  std::set<TokenRef> shared;
  for (const auto& g : groups) {
    if (g.size() < 2) continue;
    p.public_groups.push_back({g, centroid(g)});
    shared.insert(g.begin(), g.end());
  }
  for (std::size_t u = 0; u < users.size(); ++u)
    for (std::size_t t = 0; t < users[u].rows(); ++t)
      if (!shared.count({u, t})) {
        const auto r = users[u].row(t);
        p.private_tokens[u].push_back({t, {r.begin(), r.end()}});
      }
  return p;
}

// All-pairs reference: tokens of different users linked when the comparator
// accepts them in both directions; connected components with ≥2 users.
std::set<std::set<TokenRef>> pairwise_oracle(const std::vector<Matrix>& users,
                                             const ComparatorConfig& cfg) {
  std::vector<TokenRef> all;
  for (std::size_t u = 0; u < users.size(); ++u)
    for (std::size_t t = 0; t < users[u].rows(); ++t) all.push_back({u, t});
  std::vector<std::size_t> parent(all.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (all[i].user == all[j].user) continue;
      const auto a = users[all[i].user].row(all[i].token);
      const auto b = users[all[j].user].row(all[j].token);
      if (comparator_accepts(a, b, cfg) && comparator_accepts(b, a, cfg)) {
        parent[find(i)] = find(j);
      }
    }
  std::map<std::size_t, std::set<TokenRef>> comps;
  for (std::size_t i = 0; i < all.size(); ++i) comps[find(i)].insert(all[i]);
  std::set<std::set<TokenRef>> out;
  for (auto& [root, members] : comps)
    if (members.size() >= 2) out.insert(members);
  return out;
}

std::set<std::set<TokenRef>> group_sets(const Partition& p) {
  std::set<std::set<TokenRef>> out;
  for (const auto& g : p.public_groups) out.insert({g.members.begin(), g.members.end()});
  return out;
}

// Users whose tokens are drawn from a shared pool with probability `overlap`,
// otherwise fresh. Pool tokens get a small per-user perturbation.
std::vector<Matrix> pooled_users(std::size_t users, std::size_t tokens, std::size_t dim,
                                 double overlap, double jitter, Rng& rng) {
  const Matrix pool = random_matrix(tokens, dim, rng);
  std::vector<Matrix> out;
  for (std::size_t u = 0; u < users; ++u) {
    Matrix m(tokens, dim);
    for (std::size_t t = 0; t < tokens; ++t) {
      const bool shared = rng.uniform() < overlap;
      for (std::size_t j = 0; j < dim; ++j) {
        m(t, j) = shared ? pool(t, j) + jitter * rng.gaussian() : rng.gaussian();
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

void expect_covers_once(const Partition& p) {
  for (std::size_t u = 0; u < p.num_users(); ++u) {
    std::vector<int> seen(p.token_counts[u], 0);
    for (const auto& g : p.public_groups)
      for (const auto& m : g.members)
        if (m.user == u) ++seen[m.token];
    for (const auto& t : p.private_tokens[u]) ++seen[t.token];
    for (int s : seen) EXPECT_EQ(s, 1);
  }
  for (const auto& g : p.public_groups) {
    std::set<std::size_t> owners;
    for (const auto& m : g.members) owners.insert(m.user);
    EXPECT_EQ(owners.size(), g.members.size());
    EXPECT_GE(owners.size(), 2u);
  }
}

Frame random_frame(Rng& rng) {
  Frame f;
  f.channel_dim = static_cast<std::uint16_t>(1 + rng.below(8));
  f.group_count = static_cast<std::uint32_t>(rng.below(5));
  f.public_scale = static_cast<float>(rng.uniform(0.1, 3.0));
  for (std::size_t i = 0; i < f.group_count * f.channel_dim; ++i) {
    f.public_symbols.push_back(static_cast<float>(rng.gaussian()));
  }
  const std::size_t users = 1 + rng.below(5);
  for (std::size_t u = 0; u < users; ++u) {
    UserBlock b;
    b.token_count = static_cast<std::uint32_t>(rng.below(7));
    b.scale = static_cast<float>(rng.uniform(0.1, 3.0));
    std::uint32_t priv = 0;
    for (std::uint32_t t = 0; t < b.token_count; ++t) {
      const bool pub = f.group_count > 0 && rng.uniform() < 0.5;
      b.index.push_back({t, pub ? SlotKind::Public : SlotKind::Private,
                         pub ? static_cast<std::uint32_t>(rng.below(f.group_count)) : priv++});
    }
    for (std::size_t i = 0; i < priv * f.channel_dim; ++i) {
      b.symbols.push_back(static_cast<float>(rng.gaussian()));
    }
    f.users.push_back(std::move(b));
  }
  return f;
}

channel::ChannelParams none_params() { return {}; }

}  // namespace

TEST(Comparator, CosineAndStats) {
  const std::vector<double> a{1, 2, 3}, b{2, 4, 6}, z{0, 0, 0};
  EXPECT_NEAR(cosine_similarity(a, b), 1.0, 1e-15);
  EXPECT_EQ(cosine_similarity(z, z), 1.0);
  EXPECT_EQ(cosine_similarity(a, z), 0.0);
  EXPECT_DOUBLE_EQ(vector_mean(a), 2.0);
  EXPECT_DOUBLE_EQ(vector_variance(a), 2.0 / 3.0);
  ComparatorConfig cfg;
  EXPECT_TRUE(comparator_accepts(a, a, cfg));
  EXPECT_FALSE(comparator_accepts(a, b, cfg));  // same direction, different mean
  cfg.cosine_threshold = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.cosine_threshold = 0.5;
  cfg.var_tol = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Partition, SingleUserIsAllPrivate) {
  Rng rng(1);
  const std::vector<Matrix> users{random_matrix(6, 8, rng)};
  const auto p = compare_and_partition(users, {});
  EXPECT_TRUE(p.public_groups.empty());
  EXPECT_EQ(p.private_token_count(), 6u);
}

TEST(Partition, IdenticalUsersAreAllPublic) {
  Rng rng(2);
  const Matrix m = random_matrix(5, 8, rng);
  const std::vector<Matrix> users{m, m};
  const auto p = compare_and_partition(users, {0.99, 0.1, 0.1});
  EXPECT_EQ(p.public_groups.size(), 5u);
  EXPECT_EQ(p.private_token_count(), 0u);
  for (const auto& g : p.public_groups) {
    const auto r = m.row(g.members[0].token);
    EXPECT_TRUE(std::equal(r.begin(), r.end(), g.centroid.begin()));
  }
}

TEST(Partition, OneVerbatimSharedTokenMatchesPairwiseOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(500 + seed);
    std::vector<Matrix> users;
    for (int u = 0; u < 3; ++u) users.push_back(random_matrix(1 + rng.below(8), 16, rng));
    const std::size_t t1 = rng.below(users[1].rows());
    const std::size_t t2 = rng.below(users[2].rows());
    std::copy(users[1].row(t1).begin(), users[1].row(t1).end(), users[2].row(t2).begin());
    const ComparatorConfig cfg;
    const auto p = compare_and_partition(users, cfg);
    ASSERT_EQ(p.public_groups.size(), 1u) << "seed " << seed;
    EXPECT_EQ(p.public_groups[0].members, (std::vector<TokenRef>{{1, t1}, {2, t2}}));
    EXPECT_EQ(group_sets(p), pairwise_oracle(users, cfg));
    expect_covers_once(p);
  }
}

TEST(Partition, MatchesGreedyOracleOnRandomInputs) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(600 + seed);
    const auto users = pooled_users(2 + rng.below(4), 1 + rng.below(8), 12, 0.6, 0.05, rng);
    const ComparatorConfig cfg{rng.uniform(0.6, 0.99), 0.2, 0.3};
    const auto p = compare_and_partition(users, cfg);
    const auto want = greedy_oracle(users, cfg);
    EXPECT_EQ(group_sets(p), group_sets(want)) << "seed " << seed;
    ASSERT_EQ(p.public_groups.size(), want.public_groups.size());
    for (std::size_t g = 0; g < p.public_groups.size(); ++g)
      for (std::size_t j = 0; j < 12; ++j)
        EXPECT_NEAR(p.public_groups[g].centroid[j], want.public_groups[g].centroid[j], 1e-12);
    EXPECT_EQ(p.private_tokens, want.private_tokens);
    expect_covers_once(p);
  }
}

TEST(Partition, TotalityOnRandomInputs) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto users = pooled_users(1 + rng.below(6), rng.below(10), 6, rng.uniform(), 0.1, rng);
    const auto p = compare_and_partition(users, {0.8, 0.3, 0.3});
    std::size_t total = 0;
    for (const auto& m : users) total += m.rows();
    EXPECT_EQ(p.public_token_count() + p.private_token_count(), total);
    expect_covers_once(p);
  }
}

TEST(Partition, GreedyFirstFitIsNotPointwiseMonotoneInThreshold) {
  // a1 at 0°, a2 at 90°, b1 at 50°, b2 at −10°. With a loose τ b1 claims a1's
  // group first and b2 finds no partner; tightening τ sends b1 to a2 instead.
  auto at = [](double deg) {
    const double r = deg * std::numbers::pi / 180.0;
    return std::vector<double>{std::cos(r), std::sin(r)};
  };
  Matrix a(2, 2), b(2, 2);
  const std::vector<std::vector<double>> rows{at(0), at(90), at(50), at(-10)};
  for (std::size_t j = 0; j < 2; ++j) {
    a(0, j) = rows[0][j];
    a(1, j) = rows[1][j];
    b(0, j) = rows[2][j];
    b(1, j) = rows[3][j];
  }
  const std::vector<Matrix> users{a, b};
  const ComparatorConfig loose{std::cos(55.0 * std::numbers::pi / 180.0), 10.0, 10.0};
  const ComparatorConfig tight{std::cos(45.0 * std::numbers::pi / 180.0), 10.0, 10.0};
  EXPECT_EQ(compare_and_partition(users, loose).public_token_count(), 2u);
  EXPECT_EQ(compare_and_partition(users, tight).public_token_count(), 4u);
  EXPECT_EQ(group_sets(compare_and_partition(users, tight)),
            group_sets(greedy_oracle(users, tight)));
}

TEST(Partition, RaisingThresholdNeverAddsPublicTokensOnAverage) {
  constexpr int kSeeds = 40;
  std::vector<std::vector<Matrix>> inputs;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(700 + seed);
    inputs.push_back(pooled_users(2 + rng.below(5), 2 + rng.below(6), 8, 0.7, 0.15, rng));
  }
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 10; ++k) {
    const double tau = 0.5 + 0.05 * k;
    double total = 0.0;
    for (const auto& users : inputs) {
      total += static_cast<double>(compare_and_partition(users, {tau, 1.0, 1.0}).public_token_count());
    }
    const double mean = total / kSeeds;
    EXPECT_LE(mean, prev) << "tau " << tau;
    prev = mean;
  }
}

TEST(Partition, ThresholdOneKeepsOnlyParallelTokens) {
  Rng rng(21);
  const auto users = pooled_users(4, 6, 8, 0.5, 0.0, rng);
  const auto p = compare_and_partition(users, {1.0, 0.0, 0.0});
  for (const auto& g : p.public_groups)
    for (const auto& m : g.members) {
      const auto r = users[m.user].row(m.token);
      EXPECT_GE(cosine_similarity(r, g.centroid), 1.0 - 1e-12);
    }
}

TEST(Partition, DimensionMismatchThrows) {
  const std::vector<Matrix> users{Matrix(2, 4), Matrix(2, 5)};
  EXPECT_THROW(compare_and_partition(users, {}), ShapeError);
  EXPECT_THROW(compare_and_partition(std::span<const Matrix>{}, {}), ConfigError);
}

TEST(Partition, SwappingIdenticalUsersKeepsStructure) {
  Rng rng(8);
  const auto users = pooled_users(3, 5, 8, 0.5, 0.02, rng);
  const std::vector<Matrix> swapped{users[1], users[0], users[2]};
  const auto a = compare_and_partition(users, {});
  const auto b = compare_and_partition(swapped, {});
  EXPECT_EQ(a.public_token_count(), b.public_token_count());
  EXPECT_EQ(a.public_groups.size(), b.public_groups.size());
}

TEST(Accounting, IdenticalUsersSaveOneMinusOneOverU) {
  for (std::size_t u : {2u, 4u, 8u}) {
    Rng rng(u);
    const Matrix m = random_matrix(10, 32, rng);
    const std::vector<Matrix> users(u, m);
    const auto p = compare_and_partition(users, {});
    const auto a = account(p, 16);
    EXPECT_EQ(a.payload_symbols(), 10u * 16);
    EXPECT_EQ(a.baseline_symbols, u * 10 * 16);
    EXPECT_DOUBLE_EQ(a.savings_ratio(), 1.0 - 1.0 / static_cast<double>(u));
  }
}

TEST(Accounting, ZeroOverlapPayloadEqualsBaseline) {
  Rng rng(9);
  const auto users = pooled_users(4, 12, 32, 0.0, 0.0, rng);
  const auto a = account(compare_and_partition(users, {}), 16);
  EXPECT_EQ(a.payload_symbols(), a.baseline_symbols);
  EXPECT_EQ(a.savings_ratio(), 0.0);
  EXPECT_EQ(a.transmitted_bytes(), a.baseline_bytes() + a.side_info_bytes);
}

TEST(Accounting, MatchesBruteForceCountAndFrame) {
  Rng rng(10);
  const auto coder = channel::ChannelCoder::create(32, 16, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const auto users = pooled_users(4, 1 + rng.below(10), 32, 0.5, 0.01, rng);
    const auto p = compare_and_partition(users, {});
    const auto a = account(p, 16);
    // brute force: one payload row per public group plus one per private token
    std::size_t rows = p.public_groups.size(), baseline = 0;
    for (std::size_t u = 0; u < users.size(); ++u) {
      rows += p.private_tokens[u].size();
      baseline += users[u].rows();
    }
    EXPECT_EQ(a.payload_symbols(), rows * 16);
    EXPECT_EQ(a.baseline_symbols, baseline * 16);
    EXPECT_LE(a.payload_symbols(), a.baseline_symbols);
    EXPECT_EQ(a.payload_symbols() < a.baseline_symbols, !p.public_groups.empty());

    const Frame f = build_frame(p, coder);
    EXPECT_EQ(f.payload_symbols(), a.payload_symbols());
    EXPECT_EQ(f.public_symbols.size(), a.public_symbols);
    for (std::size_t u = 0; u < users.size(); ++u) {
      EXPECT_EQ(f.users[u].symbols.size(), a.private_symbols[u]);
    }
    EXPECT_EQ(serialize(f).size(), a.transmitted_bytes());
  }
}

TEST(FrameCodec, RandomFramesRoundTripBitExact) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Frame f = random_frame(rng);
    const auto bytes = serialize(f);
    const Frame back = deserialize(bytes);
    EXPECT_EQ(back, f);
    EXPECT_EQ(serialize(back), bytes);
  }
}

TEST(FrameCodec, ChecksumCatchesEverySingleByteFlip) {
  Rng rng(12);
  int detected = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto bytes = serialize(random_frame(rng));
    bytes[rng.below(bytes.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255));
    try {
      deserialize(bytes);
    } catch (const CorruptionError&) {
      ++detected;
    }
  }
  EXPECT_EQ(detected, 100);
}

TEST(FrameCodec, GoldenHeaderLayout) {
  Frame f;
  f.channel_dim = 2;
  f.group_count = 1;
  f.public_scale = 1.0f;
  f.public_symbols = {0.5f, -0.5f};
  f.users.push_back({1, 2.0f, {{0, SlotKind::Public, 0}}, {}});
  const auto b = serialize(f);
  EXPECT_EQ(b[0], 'M');
  EXPECT_EQ(b[1], '4');
  EXPECT_EQ(b[2], 'S');
  EXPECT_EQ(b[3], 'C');
  EXPECT_EQ(b[4], kFrameVersion);
  EXPECT_EQ(b[5] | (b[6] << 8), 1);   // num_users
  EXPECT_EQ(b[7] | (b[8] << 8), 2);   // D_ch
  EXPECT_EQ(b[9], 1);                 // group_count
  EXPECT_EQ(b.size(), kFrameHeaderBytes + 2 * 4 + kUserHeaderBytes + kIndexEntryBytes +
                          kFrameChecksumBytes);
  const std::uint32_t crc = b[b.size() - 4] | (b[b.size() - 3] << 8) | (b[b.size() - 2] << 16) |
                            (std::uint32_t{b[b.size() - 1]} << 24);
  EXPECT_EQ(crc, crc32(std::span(b).first(b.size() - 4)));
  EXPECT_EQ(crc32(std::vector<std::uint8_t>{'1', '2', '3', '4', '5', '6', '7', '8', '9'}),
            0xCBF43926u);
}

TEST(FrameCodec, TruncationAndTrailingBytesRejected) {
  Rng rng(13);
  const auto bytes = serialize(random_frame(rng));
  EXPECT_THROW(deserialize(std::span(bytes).first(10)), CorruptionError);
  auto longer = bytes;
  longer.insert(longer.end() - 4, 0);
  EXPECT_THROW(deserialize(longer), CorruptionError);
}

TEST(Frame, EmptyPublicSetHasNoPublicRows) {
  Rng rng(14);
  const auto users = pooled_users(3, 4, 16, 0.0, 0.0, rng);
  const auto f = build_frame(compare_and_partition(users, {}), channel::ChannelCoder::identity(16));
  EXPECT_EQ(f.group_count, 0u);
  EXPECT_TRUE(f.public_symbols.empty());
}

TEST(Frame, NoiselessReconstructionPlacesTokens) {
  Rng rng(15);
  const auto users = pooled_users(3, 6, 8, 0.5, 0.0, rng);
  const auto p = compare_and_partition(users, {});
  const auto coder = channel::ChannelCoder::identity(8);
  const std::vector<channel::ChannelParams> priv(3, none_params());
  const Frame rx = transmit_frame(build_frame(p, coder), none_params(), priv);
  EXPECT_EQ(rx, build_frame(p, coder));
  for (std::size_t u = 0; u < 3; ++u) {
    const Matrix got = reconstruct(rx, coder, u);
    ASSERT_EQ(got.rows(), users[u].rows());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_NEAR(got.flat()[i], users[u].flat()[i], 1e-6);  // exact pool copies, f32 wire
    }
  }
}

TEST(Frame, MergedTokensReconstructToCentroid) {
  Rng rng(16);
  const Matrix a = random_matrix(1, 8, rng);
  Matrix b = a;
  Matrix delta(1, 8);
  for (double& v : delta.flat()) v = rng.gaussian(0.0, 0.01);
  axpy(b, delta);
  const std::vector<Matrix> users{a, b};
  const auto p = compare_and_partition(users, {});
  ASSERT_EQ(p.public_groups.size(), 1u);
  const auto coder = channel::ChannelCoder::identity(8);
  const Frame f = build_frame(p, coder);
  const Matrix ra = reconstruct(f, coder, 0);
  const Matrix rb = reconstruct(f, coder, 1);
  EXPECT_EQ(ra, rb);
  for (std::size_t j = 0; j < 8; ++j) {
    EXPECT_NEAR(ra(0, j) - a(0, j), delta(0, j) / 2, 1e-6);
    EXPECT_NEAR(b(0, j) - rb(0, j), delta(0, j) / 2, 1e-6);
  }
}

TEST(Frame, PublicBlockIsBroadcastPrivateBlocksIndependent) {
  Rng rng(17);
  const Matrix shared = random_matrix(3, 8, rng);
  std::vector<Matrix> users;
  for (int u = 0; u < 3; ++u) users.push_back(vconcat(shared, random_matrix(2, 8, rng)));
  const auto p = compare_and_partition(users, {});
  ASSERT_EQ(p.public_groups.size(), 3u);
  const auto coder = channel::ChannelCoder::identity(8);
  channel::ChannelParams pub{channel::Family::Awgn, 5.0, 1};
  std::vector<channel::ChannelParams> priv;
  for (std::uint64_t u = 0; u < 3; ++u) priv.push_back({channel::Family::Awgn, 5.0, 100 + u});
  const Frame rx = transmit_frame(build_frame(p, coder), pub, priv);
  std::vector<Matrix> rec;
  for (std::size_t u = 0; u < 3; ++u) rec.push_back(reconstruct(rx, coder, u));
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t u = 1; u < 3; ++u)
      EXPECT_TRUE(std::equal(rec[0].row(t).begin(), rec[0].row(t).end(), rec[u].row(t).begin()));
  EXPECT_NE(rx.users[0].symbols, rx.users[1].symbols);
  EXPECT_NE(rx.users[1].symbols, rx.users[2].symbols);
}

TEST(Frame, BrokenIndexMapsAreRejected) {
  Rng rng(18);
  const auto users = pooled_users(2, 4, 8, 0.5, 0.0, rng);
  const auto coder = channel::ChannelCoder::identity(8);
  const Frame good = build_frame(compare_and_partition(users, {}), coder);
  EXPECT_THROW(reconstruct(good, coder, 2), ConfigError);

  Frame overlap = good;
  overlap.users[0].index[1].token = overlap.users[0].index[0].token;
  EXPECT_THROW(reconstruct(overlap, coder, 0), CorruptionError);

  Frame gap = good;
  gap.users[0].index.pop_back();
  EXPECT_THROW(reconstruct(gap, coder, 0), CorruptionError);

  Frame bad_slot = good;
  bad_slot.users[0].index[0].kind = SlotKind::Public;
  bad_slot.users[0].index[0].slot = 99;
  EXPECT_THROW(reconstruct(bad_slot, coder, 0), CorruptionError);
}

TEST(Frame, DescribeMentionsCounts) {
  Rng rng(19);
  const auto users = pooled_users(2, 3, 4, 1.0, 0.0, rng);
  const auto d = describe(build_frame(compare_and_partition(users, {}), channel::ChannelCoder::identity(4)));
  EXPECT_NE(d.find("2 users"), std::string::npos) << d;
  EXPECT_NE(d.find("3 public groups"), std::string::npos) << d;
}
