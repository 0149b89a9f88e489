#include "m4sc/sharing/frame.hpp"

#include <zlib.h>

#include <algorithm>
#include <limits>
#include <sstream>
#include <string>

#include "m4sc/binary_io.hpp"
#include "m4sc/errors.hpp"

namespace m4sc::sharing {

namespace {

constexpr std::string_view kMagic = "M4SC";

Matrix to_matrix(std::span<const float> values, std::size_t rows, std::size_t cols) {
  std::vector<double> data(values.begin(), values.end());
  return Matrix(rows, cols, std::move(data));
}

std::vector<float> to_floats(const Matrix& m) {
  return {m.flat().begin(), m.flat().end()};
}

template <typename T>
T checked_narrow(std::size_t v, const char* what) {
  if (v > std::numeric_limits<T>::max()) {
    throw ConfigError(std::string(what) + " " + std::to_string(v) + " exceeds wire field width");
  }
  return static_cast<T>(v);
}

}  // namespace

std::size_t UserBlock::private_rows() const {
  return static_cast<std::size_t>(
      std::count_if(index.begin(), index.end(), [](const IndexEntry& e) {
        return e.kind == SlotKind::Private;
      }));
}

std::size_t Frame::payload_symbols() const {
  std::size_t n = public_symbols.size();
  for (const auto& u : users) n += u.symbols.size();
  return n;
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, data.data(), static_cast<uInt>(data.size()));
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> serialize(const Frame& f) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u8(f.version);
  w.u16(checked_narrow<std::uint16_t>(f.users.size(), "num_users"));
  w.u16(f.channel_dim);
  w.u32(f.group_count);
  w.f32(f.public_scale);
  for (float v : f.public_symbols) w.f32(v);
  for (const auto& u : f.users) {
    w.u32(u.token_count);
    w.f32(u.scale);
    for (const auto& e : u.index) {
      w.u32(e.token);
      w.u8(static_cast<std::uint8_t>(e.kind));
      w.u32(e.slot);
    }
    for (float v : u.symbols) w.f32(v);
  }
  w.u32(crc32(w.buffer()));
  return w.take();
}

Frame deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderBytes + kFrameChecksumBytes) {
    throw CorruptionError("frame shorter than header");
  }
  const auto body = bytes.first(bytes.size() - kFrameChecksumBytes);
  ByteReader tail(bytes.last(kFrameChecksumBytes));
  if (tail.u32() != crc32(body)) throw CorruptionError("frame checksum mismatch");

  ByteReader r(body);
  if (r.bytes(4) != kMagic) throw CorruptionError("bad frame magic");
  Frame f;
  f.version = r.u8();
  if (f.version != kFrameVersion) {
    throw CorruptionError("unsupported frame version " + std::to_string(f.version));
  }
  const std::uint16_t num_users = r.u16();
  f.channel_dim = r.u16();
  f.group_count = r.u32();
  f.public_scale = r.f32();
  const std::uint64_t public_len = std::uint64_t{f.group_count} * f.channel_dim;
  if (public_len * 4 > r.remaining()) throw CorruptionError("public block exceeds frame size");
  f.public_symbols.resize(public_len);
  for (float& v : f.public_symbols) v = r.f32();
  for (std::uint16_t u = 0; u < num_users; ++u) {
    UserBlock b;
    b.token_count = r.u32();
    b.scale = r.f32();
    if (std::uint64_t{b.token_count} * kIndexEntryBytes > r.remaining()) {
      throw CorruptionError("user " + std::to_string(u) + " index map exceeds frame size");
    }
    b.index.resize(b.token_count);
    for (auto& e : b.index) {
      e.token = r.u32();
      const std::uint8_t kind = r.u8();
      if (kind > 1) throw CorruptionError("bad index entry kind " + std::to_string(kind));
      e.kind = static_cast<SlotKind>(kind);
      e.slot = r.u32();
    }
    const std::uint64_t priv_len = std::uint64_t{b.private_rows()} * f.channel_dim;
    if (priv_len * 4 > r.remaining()) {
      throw CorruptionError("user " + std::to_string(u) + " private block exceeds frame size");
    }
    b.symbols.resize(priv_len);
    for (float& v : b.symbols) v = r.f32();
    f.users.push_back(std::move(b));
  }
  if (r.remaining() != 0) throw CorruptionError("trailing bytes in frame");
  return f;
}

Frame build_frame(const Partition& partition, const channel::ChannelCoder& coder) {
  if (partition.dim != coder.dim() && partition.num_users() > 0 &&
      partition.public_token_count() + partition.private_token_count() > 0) {
    throw ShapeError("build_frame: partition dim " + std::to_string(partition.dim) +
                     " vs coder input dim " + std::to_string(coder.dim()));
  }
  const std::size_t d = coder.dim();
  Frame f;
  f.channel_dim = checked_narrow<std::uint16_t>(coder.channel_dim(), "channel dim");
  f.group_count = checked_narrow<std::uint32_t>(partition.public_groups.size(), "group count");

  Matrix centroids(partition.public_groups.size(), d);
  for (std::size_t g = 0; g < partition.public_groups.size(); ++g) {
    const auto& c = partition.public_groups[g].centroid;
    std::copy(c.begin(), c.end(), centroids.row(g).begin());
  }
  const auto pub = channel::channel_encode(coder, centroids);
  f.public_symbols = to_floats(pub.symbols);
  f.public_scale = static_cast<float>(pub.scale);

  // token → public group, per user
  std::vector<std::vector<std::int64_t>> group_of(partition.num_users());
  for (std::size_t u = 0; u < partition.num_users(); ++u) {
    group_of[u].assign(partition.token_counts[u], -1);
  }
  for (std::size_t g = 0; g < partition.public_groups.size(); ++g) {
    for (const auto& m : partition.public_groups[g].members) {
      group_of[m.user][m.token] = static_cast<std::int64_t>(g);
    }
  }

  for (std::size_t u = 0; u < partition.num_users(); ++u) {
    const auto& priv = partition.private_tokens[u];
    Matrix rows(priv.size(), d);
    std::vector<std::int64_t> slot_of(partition.token_counts[u], -1);
    for (std::size_t i = 0; i < priv.size(); ++i) {
      std::copy(priv[i].vector.begin(), priv[i].vector.end(), rows.row(i).begin());
      slot_of[priv[i].token] = static_cast<std::int64_t>(i);
    }
    const auto enc = channel::channel_encode(coder, rows);
    UserBlock b;
    b.token_count = checked_narrow<std::uint32_t>(partition.token_counts[u], "token count");
    b.scale = static_cast<float>(enc.scale);
    b.symbols = to_floats(enc.symbols);
    for (std::size_t t = 0; t < partition.token_counts[u]; ++t) {
      if (group_of[u][t] >= 0) {
        b.index.push_back({static_cast<std::uint32_t>(t), SlotKind::Public,
                           static_cast<std::uint32_t>(group_of[u][t])});
      } else {
        b.index.push_back({static_cast<std::uint32_t>(t), SlotKind::Private,
                           static_cast<std::uint32_t>(slot_of[t])});
      }
    }
    f.users.push_back(std::move(b));
  }
  return f;
}

Frame transmit_frame(const Frame& frame, const channel::ChannelParams& public_params,
                     std::span<const channel::ChannelParams> private_params) {
  if (private_params.size() != frame.users.size()) {
    throw ConfigError("transmit_frame: " + std::to_string(private_params.size()) +
                      " private channels for " + std::to_string(frame.users.size()) + " users");
  }
  Frame out = frame;
  const std::size_t dch = frame.channel_dim;
  if (!frame.public_symbols.empty()) {
    const Matrix sent = to_matrix(frame.public_symbols, frame.group_count, dch);
    out.public_symbols = to_floats(channel::transmit(public_params, sent));
  }
  for (std::size_t u = 0; u < frame.users.size(); ++u) {
    const auto& b = frame.users[u];
    if (b.symbols.empty()) continue;
    const Matrix sent = to_matrix(b.symbols, b.symbols.size() / dch, dch);
    out.users[u].symbols = to_floats(channel::transmit(private_params[u], sent));
  }
  return out;
}

Matrix reconstruct(const Frame& frame, const channel::ChannelCoder& coder, std::size_t user) {
  if (user >= frame.users.size()) {
    throw ConfigError("reconstruct: user " + std::to_string(user) + " not in frame of " +
                      std::to_string(frame.users.size()));
  }
  if (frame.channel_dim != coder.channel_dim()) {
    throw ShapeError("reconstruct: frame D_ch " + std::to_string(frame.channel_dim) +
                     " vs coder " + std::to_string(coder.channel_dim()));
  }
  const std::size_t dch = frame.channel_dim;
  const UserBlock& b = frame.users[user];
  const std::size_t priv_rows = b.symbols.size() / (dch ? dch : 1);

  const Matrix pub = channel::channel_decode(
      coder, to_matrix(frame.public_symbols, frame.group_count, dch), frame.public_scale);
  const Matrix priv =
      channel::channel_decode(coder, to_matrix(b.symbols, priv_rows, dch), b.scale);

  Matrix out(b.token_count, coder.dim());
  std::vector<bool> seen(b.token_count, false);
  std::vector<bool> slot_used(priv_rows, false);
  for (const auto& e : b.index) {
    if (e.token >= b.token_count || seen[e.token]) {
      throw CorruptionError("index map overlap or out-of-range token " + std::to_string(e.token));
    }
    seen[e.token] = true;
    const double* src = nullptr;
    if (e.kind == SlotKind::Public) {
      if (e.slot >= frame.group_count) {
        throw CorruptionError("public slot " + std::to_string(e.slot) + " out of range");
      }
      src = pub.row(e.slot).data();
    } else {
      if (e.slot >= priv_rows || slot_used[e.slot]) {
        throw CorruptionError("private slot " + std::to_string(e.slot) + " out of range or reused");
      }
      slot_used[e.slot] = true;
      src = priv.row(e.slot).data();
    }
    std::copy(src, src + coder.dim(), out.row(e.token).begin());
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw CorruptionError("index map leaves a token uncovered for user " + std::to_string(user));
  }
  return out;
}

std::string describe(const Frame& f) {
  std::ostringstream os;
  os << "frame v" << int(f.version) << ": " << f.users.size() << " users, D_ch " << f.channel_dim
     << ", " << f.group_count << " public groups (scale " << f.public_scale << ")\n";
  for (std::size_t u = 0; u < f.users.size(); ++u) {
    const auto& b = f.users[u];
    os << "  user " << u << ": " << b.token_count << " tokens, "
       << (b.token_count - b.private_rows()) << " public, " << b.private_rows()
       << " private (scale " << b.scale << ")\n";
  }
  os << "  payload symbols " << f.payload_symbols() << ", frame bytes " << serialize(f).size()
     << "\n";
  return os.str();
}

}  // namespace m4sc::sharing
