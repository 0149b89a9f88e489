#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "m4sc/channel/channel.hpp"
#include "m4sc/sharing/partition.hpp"

namespace m4sc::sharing {

// Wire layout (all little-endian):
//
//   "M4SC" | version u8 | num_users u16 | D_ch u16 | group_count u32 |
//   public scale f32 | public block f32 × (group_count · D_ch) |
//   per user: token_count u32 | scale f32 |
//             token_count × (token u32, kind u8, slot u32) |
//             private block f32 × (private entries · D_ch) |
//   CRC-32 (IEEE, zlib polynomial) of every preceding byte, u32
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderBytes = 4 + 1 + 2 + 2 + 4 + 4;
inline constexpr std::size_t kUserHeaderBytes = 4 + 4;
inline constexpr std::size_t kIndexEntryBytes = 4 + 1 + 4;
inline constexpr std::size_t kFrameChecksumBytes = 4;

enum class SlotKind : std::uint8_t { Public = 0, Private = 1 };

struct IndexEntry {
  std::uint32_t token = 0;
  SlotKind kind = SlotKind::Private;
  std::uint32_t slot = 0;  ///< public group id or private row
  friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

struct UserBlock {
  std::uint32_t token_count = 0;
  float scale = 1.0f;
  std::vector<IndexEntry> index;
  std::vector<float> symbols;  ///< private rows × D_ch, row-major

  std::size_t private_rows() const;
  friend bool operator==(const UserBlock&, const UserBlock&) = default;
};

struct Frame {
  std::uint8_t version = kFrameVersion;
  std::uint16_t channel_dim = 0;
  std::uint32_t group_count = 0;
  float public_scale = 1.0f;
  std::vector<float> public_symbols;  ///< group_count × D_ch, row-major
  std::vector<UserBlock> users;

  std::size_t payload_symbols() const;
  friend bool operator==(const Frame&, const Frame&) = default;
};

std::uint32_t crc32(std::span<const std::uint8_t> data);

std::vector<std::uint8_t> serialize(const Frame& frame);
/// Throws CorruptionError on bad magic/version, truncation, inconsistent
/// sizes, trailing bytes, or checksum mismatch.
Frame deserialize(std::span<const std::uint8_t> bytes);

/// Channel-encodes the public centroids once and each user's private vectors
/// into that user's block, recording index maps and per-block scales.
Frame build_frame(const Partition& partition, const channel::ChannelCoder& coder);

/// Public block through `public_params` once (every user sees that single
/// realization); user u's private block through `private_params[u]`.
/// Header and index maps are side information and pass unchanged.
Frame transmit_frame(const Frame& frame, const channel::ChannelParams& public_params,
                     std::span<const channel::ChannelParams> private_params);

/// User `user`'s T_u × D tensor rebuilt from the public and private blocks.
/// Throws CorruptionError when the index map has a gap, an overlap, or a slot
/// out of range, and ConfigError when the user is not in the frame.
Matrix reconstruct(const Frame& frame, const channel::ChannelCoder& coder, std::size_t user);

/// Human-readable summary used by the CLI's inspect-frame command.
std::string describe(const Frame& frame);

}  // namespace m4sc::sharing
