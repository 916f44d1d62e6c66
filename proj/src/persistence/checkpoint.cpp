// Copyright 2026 The Orchestra Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "orchestra/persistence/checkpoint.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "orchestra/error.hpp"

namespace orchestra {

namespace {

using Kind = PersistenceError::Kind;

enum Section : std::uint32_t {
  kDims = 1,
  kAgents = 2,
  kRouting = 3,
  kEffectiveness = 4,
  kUtilization = 5,
  kComm = 6,
  kRng = 7,
  kCheckpointRef = 8,
};
constexpr std::uint32_t kSectionCount = 8;
constexpr std::size_t kHeaderBytes = 8 + 4 + 8 + 4;
constexpr std::size_t kDigestBytes = 32;

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_integral_v<T> || std::is_floating_point_v<T>);
    if constexpr (std::is_same_v<T, float>) put_bits(std::bit_cast<std::uint32_t>(v), 4);
    else if constexpr (std::is_same_v<T, double>) put_bits(std::bit_cast<std::uint64_t>(v), 8);
    else put_bits(static_cast<std::uint64_t>(v), sizeof(T));
  }
  void put_bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf.insert(buf.end(), b, b + n);
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }
  template <typename Derived>
  void put_floats(const Eigen::DenseBase<Derived>& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) put(static_cast<float>(m(i, j)));
  }

  std::vector<std::uint8_t> buf;

 private:
  void put_bits(std::uint64_t v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> b, std::string what) : b_(b), what_(std::move(what)) {}

  template <typename T>
  T get() {
    if constexpr (std::is_same_v<T, float>) return std::bit_cast<float>(static_cast<std::uint32_t>(bits(4)));
    else if constexpr (std::is_same_v<T, double>) return std::bit_cast<double>(bits(8));
    else return static_cast<T>(bits(sizeof(T)));
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    auto s = take(n);
    return {reinterpret_cast<const char*>(s.data()), s.size()};
  }
  template <typename Dense>
  void get_floats(Dense& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<typename Dense::Scalar>(get<float>());
  }
  std::size_t remaining() const { return b_.size() - pos_; }
  void finish() const {
    if (pos_ != b_.size())
      throw PersistenceError(Kind::Parse, fmt::format("checkpoint: {} has {} trailing bytes", what_, remaining()));
  }

 private:
  void need(std::size_t n) const {
    if (n > remaining())
      throw PersistenceError(Kind::Parse,
                             fmt::format("checkpoint: {} truncated (need {} bytes, have {})", what_, n, remaining()));
  }
  std::uint64_t bits(std::size_t n) {
    need(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
  std::string what_;
};

void put_window(Writer& w, const EffectivenessWindow& e) {
  w.put(static_cast<std::uint32_t>(e.capacity()));
  w.put(static_cast<std::uint32_t>(e.size()));
  for (bool f : e.flags()) w.put(static_cast<std::uint8_t>(f ? 1 : 0));
}

EffectivenessWindow get_window(Reader& r) {
  const auto cap = r.get<std::uint32_t>();
  const auto n = r.get<std::uint32_t>();
  if (cap == 0 || n > cap) throw PersistenceError(Kind::Parse, "checkpoint: malformed effectiveness window");
  std::deque<bool> flags;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto f = r.get<std::uint8_t>();
    if (f > 1) throw PersistenceError(Kind::Parse, "checkpoint: effectiveness flag out of range");
    flags.push_back(f == 1);
  }
  EffectivenessWindow e(cap);
  e.assign(std::move(flags));
  return e;
}

SpecialistKind get_kind(Reader& r) {
  const auto k = r.get<std::uint8_t>();
  if (k >= std::size(kAllKinds)) throw PersistenceError(Kind::Parse, "checkpoint: unknown specialist kind");
  return static_cast<SpecialistKind>(k);
}

bool get_bool(Reader& r) {
  const auto v = r.get<std::uint8_t>();
  if (v > 1) throw PersistenceError(Kind::Parse, "checkpoint: boolean out of range");
  return v == 1;
}

std::vector<std::uint8_t> encode_section(Section tag, const SystemState& s) {
  Writer w;
  const StateDims& d = s.dims;
  switch (tag) {
    case kDims:
      w.put(static_cast<std::int32_t>(d.prompt));
      w.put(static_cast<std::int32_t>(d.context));
      w.put(static_cast<std::int32_t>(d.cap_rows));
      w.put(static_cast<std::int32_t>(d.cap_cols));
      w.put(static_cast<std::uint32_t>(s.agents.size()));
      break;
    case kAgents:
      for (const auto& a : s.agents) {
        if (a.state.dims() != d) throw ShapeError("write_checkpoint: agent state does not match dims");
        w.put(a.state.agent_id);
        w.put(static_cast<std::uint8_t>(a.kind));
        w.put(static_cast<std::uint8_t>(a.live ? 1 : 0));
        w.put(a.rho);
        for (double t : a.aptitude.task) w.put(t);
        w.put(a.aptitude.trigger_match);
        w.put(a.rng.key());
        w.put(a.rng.counter());
        w.put_floats(a.state.prompt);
        w.put_floats(a.state.context);
        w.put_floats(a.state.capability);
      }
      break;
    case kRouting:
      w.put(static_cast<std::uint32_t>(s.routing.size()));
      for (const auto& e : s.routing.entries()) {
        if (e.capability.rows() != d.cap_rows || e.capability.cols() != d.cap_cols)
          throw ShapeError("write_checkpoint: routing capability does not match dims");
        w.put(e.id);
        w.put(static_cast<std::uint8_t>(e.kind));
        w.put(static_cast<std::uint8_t>(e.live ? 1 : 0));
        w.put_floats(e.capability);
        for (const auto& h : e.history) {
          w.put(static_cast<std::uint32_t>(h.size()));
          for (float v : h) w.put(v);
        }
        w.put(static_cast<std::int32_t>(e.load.tasks));
        w.put(static_cast<std::int32_t>(e.load.queue));
        w.put(e.load.utilization);
      }
      break;
    case kEffectiveness:
      put_window(w, s.effectiveness);
      w.put(static_cast<std::uint32_t>(s.agent_effectiveness.size()));
      for (const auto& e : s.agent_effectiveness) put_window(w, e);
      break;
    case kUtilization: {
      w.put(static_cast<std::uint32_t>(s.utilization.size()));
      w.put(static_cast<std::uint32_t>(s.agents.size()));
      for (const auto& row : s.utilization) {
        if (row.size() != s.agents.size()) throw ShapeError("write_checkpoint: utilization row size");
        for (float v : row) w.put(v);
      }
      break;
    }
    case kComm:
      w.put(static_cast<std::uint32_t>(s.comm_counts.rows()));
      w.put(static_cast<std::uint32_t>(s.comm_counts.cols()));
      w.put_floats(s.comm_counts);
      break;
    case kRng:
      w.put(s.rng.key());
      w.put(s.rng.counter());
      break;
    case kCheckpointRef:
      w.put(s.last_checkpoint.tick);
      w.put_string(s.last_checkpoint.path);
      w.put_string(s.last_checkpoint.digest);
      break;
  }
  return std::move(w.buf);
}

void decode_section(Section tag, Reader& r, SystemState& s, std::uint32_t& agent_count) {
  StateDims& d = s.dims;
  switch (tag) {
    case kDims: {
      d.prompt = r.get<std::int32_t>();
      d.context = r.get<std::int32_t>();
      d.cap_rows = r.get<std::int32_t>();
      d.cap_cols = r.get<std::int32_t>();
      agent_count = r.get<std::uint32_t>();
      if (d.prompt < 0 || d.context < 0 || d.cap_rows < 0 || d.cap_cols < 0)
        throw PersistenceError(Kind::Parse, "checkpoint: negative dimension");
      break;
    }
    case kAgents:
      s.agents.clear();
      for (std::uint32_t i = 0; i < agent_count; ++i) {
        SimAgent a;
        a.state.agent_id = r.get<std::uint32_t>();
        a.kind = get_kind(r);
        a.live = get_bool(r);
        a.rho = r.get<double>();
        for (double& t : a.aptitude.task) t = r.get<double>();
        a.aptitude.trigger_match = r.get<double>();
        const auto key = r.get<std::uint64_t>();
        const auto ctr = r.get<std::uint64_t>();
        a.rng = RandomStream::from_state(key, ctr);
        a.state.prompt.resize(d.prompt);
        a.state.context.resize(d.context);
        a.state.capability.resize(d.cap_rows, d.cap_cols);
        r.get_floats(a.state.prompt);
        r.get_floats(a.state.context);
        r.get_floats(a.state.capability);
        s.agents.push_back(std::move(a));
      }
      break;
    case kRouting: {
      const auto n = r.get<std::uint32_t>();
      std::vector<AgentEntry> entries;
      for (std::uint32_t i = 0; i < n; ++i) {
        AgentEntry e;
        e.id = r.get<std::uint32_t>();
        e.kind = get_kind(r);
        e.live = get_bool(r);
        e.capability.resize(d.cap_rows, d.cap_cols);
        r.get_floats(e.capability);
        for (auto& h : e.history) {
          const auto len = r.get<std::uint32_t>();
          if (len > r.remaining() / 4) throw PersistenceError(Kind::Parse, "checkpoint: routing history truncated");
          h.resize(len);
          for (float& v : h) v = r.get<float>();
        }
        e.load.tasks = r.get<std::int32_t>();
        e.load.queue = r.get<std::int32_t>();
        e.load.utilization = r.get<double>();
        entries.push_back(std::move(e));
      }
      s.routing.entries() = std::move(entries);
      break;
    }
    case kEffectiveness: {
      s.effectiveness = get_window(r);
      const auto n = r.get<std::uint32_t>();
      s.agent_effectiveness.clear();
      for (std::uint32_t i = 0; i < n; ++i) s.agent_effectiveness.push_back(get_window(r));
      break;
    }
    case kUtilization: {
      const auto rows = r.get<std::uint32_t>();
      const auto cols = r.get<std::uint32_t>();
      if (static_cast<std::uint64_t>(rows) * cols > r.remaining() / 4)
        throw PersistenceError(Kind::Parse, "checkpoint: utilization truncated");
      s.utilization.clear();
      for (std::uint32_t i = 0; i < rows; ++i) {
        std::vector<float> row(cols);
        for (float& v : row) v = r.get<float>();
        s.utilization.push_back(std::move(row));
      }
      break;
    }
    case kComm: {
      const auto rows = r.get<std::uint32_t>();
      const auto cols = r.get<std::uint32_t>();
      if (static_cast<std::uint64_t>(rows) * cols > r.remaining() / 4)
        throw PersistenceError(Kind::Parse, "checkpoint: communication matrix truncated");
      s.comm_counts.resize(rows, cols);
      r.get_floats(s.comm_counts);
      break;
    }
    case kRng: {
      const auto key = r.get<std::uint64_t>();
      const auto ctr = r.get<std::uint64_t>();
      s.rng = RandomStream::from_state(key, ctr);
      break;
    }
    case kCheckpointRef:
      s.last_checkpoint.tick = r.get<std::uint64_t>();
      s.last_checkpoint.path = r.get_string();
      s.last_checkpoint.digest = r.get_string();
      break;
  }
  r.finish();
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const SystemState& s) {
  Writer w;
  w.put_bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.put(kCheckpointVersion);
  w.put(s.tick);
  w.put(kSectionCount);
  for (std::uint32_t tag = 1; tag <= kSectionCount; ++tag) {
    const auto body = encode_section(static_cast<Section>(tag), s);
    w.put(tag);
    w.put(static_cast<std::uint64_t>(body.size()));
    w.put_bytes(body.data(), body.size());
  }
  const Digest d = sha256(w.buf);
  w.put_bytes(d.data(), d.size());
  return std::move(w.buf);
}

CheckpointHeader read_checkpoint_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kCheckpointMagic ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    throw PersistenceError(Kind::BadMagic, "checkpoint: bad magic bytes");
  Reader r(bytes.subspan(sizeof kCheckpointMagic), "header");
  CheckpointHeader h;
  h.version = r.get<std::uint32_t>();
  if (h.version != kCheckpointVersion)
    throw PersistenceError(Kind::UnsupportedVersion,
                           fmt::format("checkpoint: unsupported format version {} (this build reads version {})",
                                       h.version, kCheckpointVersion));
  h.tick = r.get<std::uint64_t>();
  h.sections = r.get<std::uint32_t>();
  if (bytes.size() < kHeaderBytes + kDigestBytes)
    throw PersistenceError(Kind::Parse, "checkpoint: file truncated before digest");
  std::copy(bytes.end() - kDigestBytes, bytes.end(), h.digest.begin());
  return h;
}

SystemState decode_checkpoint(std::span<const std::uint8_t> bytes, const RoutingConfig& routing) {
  const CheckpointHeader h = read_checkpoint_header(bytes);
  if (h.sections != kSectionCount)
    throw PersistenceError(Kind::Parse, fmt::format("checkpoint: expected {} sections, found {}", kSectionCount, h.sections));

  // Structure first, so truncation reports as such rather than as a digest
  // mismatch.
  const auto body = bytes.subspan(0, bytes.size() - kDigestBytes);
  Reader walk(body.subspan(kHeaderBytes), "section table");
  std::vector<std::pair<std::uint32_t, std::span<const std::uint8_t>>> sections;
  for (std::uint32_t i = 0; i < h.sections; ++i) {
    const auto tag = walk.get<std::uint32_t>();
    const auto len = walk.get<std::uint64_t>();
    if (len > walk.remaining())
      throw PersistenceError(Kind::Parse, fmt::format("checkpoint: section {} truncated", tag));
    sections.emplace_back(tag, walk.take(static_cast<std::size_t>(len)));
  }
  walk.finish();

  if (sha256(body) != h.digest) throw PersistenceError(Kind::DigestMismatch, "checkpoint: digest mismatch");

  SystemState s;
  s.tick = h.tick;
  s.routing = RoutingTable(routing);
  std::uint32_t agents = 0;
  for (std::uint32_t i = 0; i < h.sections; ++i) {
    const auto& [tag, payload] = sections[i];
    if (tag != i + 1)
      throw PersistenceError(Kind::Parse, fmt::format("checkpoint: section {} where {} expected", tag, i + 1));
    Reader r(payload, fmt::format("section {}", tag));
    decode_section(static_cast<Section>(tag), r, s, agents);
  }
  if (s.routing.size() != s.agents.size() || s.agent_effectiveness.size() != s.agents.size() ||
      s.comm_counts.rows() != static_cast<Eigen::Index>(s.agents.size()) ||
      s.comm_counts.cols() != static_cast<Eigen::Index>(s.agents.size()))
    throw PersistenceError(Kind::Parse, "checkpoint: sections disagree on the agent count");
  s.omega = utilization_shares(s);
  return s;
}

std::string state_digest(const SystemState& s) {
  const auto bytes = encode_checkpoint(s);
  Digest d;
  std::copy(bytes.end() - kDigestBytes, bytes.end(), d.begin());
  return to_hex(d);
}

Checkpoint write_checkpoint(const SystemState& s, const std::string& path) {
  const auto bytes = encode_checkpoint(s);
  const std::string tmp = fmt::format("{}.tmp.{}", path, ::getpid());
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0)
    throw PersistenceError(Kind::Io, fmt::format("write_checkpoint: cannot create {}: {}", tmp, std::strerror(errno)));
  std::size_t off = 0;
  bool ok = true;
  while (off < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + off, bytes.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      ok = false;
      break;
    }
    off += static_cast<std::size_t>(n);
  }
  const int err = errno;
  ok = ok && ::fsync(fd) == 0;
  ok = (::close(fd) == 0) && ok;
  if (!ok || std::rename(tmp.c_str(), path.c_str()) != 0) {
    const int e = errno ? errno : err;
    std::remove(tmp.c_str());
    throw PersistenceError(Kind::Io, fmt::format("write_checkpoint: cannot write {}: {}", path, std::strerror(e)));
  }
  Digest d;
  std::copy(bytes.end() - kDigestBytes, bytes.end(), d.begin());
  return {path, s.tick, to_hex(d)};
}

SystemState read_checkpoint(const std::string& path, const RoutingConfig& routing) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PersistenceError(Kind::Io, fmt::format("read_checkpoint: cannot open {}", path));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw PersistenceError(Kind::Io, fmt::format("read_checkpoint: read error on {}", path));
  return decode_checkpoint(bytes, routing);
}

}  // namespace orchestra
