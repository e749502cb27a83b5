#include "hapticsim/wire.hpp"

#include <bit>
#include <cstring>

namespace hapticsim::protocol {

namespace {

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  bool u8(std::uint8_t& v) {
    if (!need(1)) return false;
    v = b_[pos_++];
    return true;
  }
  bool u16(std::uint16_t& v) {
    if (!need(2)) return false;
    v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
    pos_ += 2;
    return true;
  }
  bool u32(std::uint32_t& v) {
    if (!need(4)) return false;
    v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b_[pos_ + i];
    pos_ += 4;
    return true;
  }
  bool u64(std::uint64_t& v) {
    if (!need(8)) return false;
    v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b_[pos_ + i];
    pos_ += 8;
    return true;
  }
  bool f64(double& v) {
    std::uint64_t u;
    if (!u64(u)) return false;
    v = std::bit_cast<double>(u);
    return true;
  }
  template <std::size_t N>
  bool f64s(std::array<double, N>& a) {
    for (auto& x : a) {
      if (!f64(x)) return false;
    }
    return true;
  }
  bool str(std::string& s) {
    std::uint16_t n;
    if (!u16(n) || !need(n)) return false;
    s.assign(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return true;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  bool need(std::size_t n) const { return b_.size() - pos_ >= n; }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void put_str(std::vector<std::uint8_t>& out, const std::string& s) {
  if (s.size() > 0xFFFF) throw EncodeError("string field longer than 65535 bytes");
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

template <std::size_t N>
void put_f64s(std::vector<std::uint8_t>& out, const std::array<double, N>& a) {
  for (double x : a) put_f64(out, x);
}

struct PayloadWriter {
  std::vector<std::uint8_t>& out;

  void operator()(const GetStylusPose&) const {}
  void operator()(const StylusPose& m) const {
    put_u64(out, m.tick);
    put_f64s(out, m.position);
    put_f64s(out, m.quaternion);
    out.push_back(m.button);
  }
  void operator()(const SetForce& m) const {
    put_f64s(out, m.force);
    out.push_back(m.force_class);
  }
  void operator()(const EngageSelect& m) const { put_str(out, m.entity_id); }
  void operator()(const Release&) const {}
  void operator()(const SetScaleMode& m) const {
    out.push_back(m.mode);
    put_f64(out, m.value);
  }
  void operator()(const SetFrameMode& m) const {
    out.push_back(m.mode);
    out.push_back(m.frame ? 1 : 0);
    if (m.frame) put_f64s(out, *m.frame);
  }
  void operator()(const SceneSnapshot& m) const {
    if (m.poses.size() > 0xFFFFFFFFu) throw EncodeError("too many snapshot entries");
    put_u32(out, static_cast<std::uint32_t>(m.poses.size()));
    for (const auto& [id, pose] : m.poses) {
      put_str(out, id);
      put_f64s(out, pose);
    }
  }
  void operator()(const Error& m) const {
    put_u16(out, m.code);
    put_str(out, m.text);
  }
  void operator()(const Hello& m) const { out.push_back(m.version); }
};

DecodeResult invalid(ErrorCode code, std::string text, std::size_t consumed) {
  DecodeResult r;
  r.status = DecodeStatus::Invalid;
  r.error = {static_cast<std::uint16_t>(code), std::move(text)};
  r.consumed = consumed;
  return r;
}

std::optional<Message> parse_payload(std::uint8_t tag, Reader& r) {
  switch (static_cast<Tag>(tag)) {
    case Tag::GetStylusPose: return GetStylusPose{};
    case Tag::StylusPose: {
      StylusPose m;
      if (r.u64(m.tick) && r.f64s(m.position) && r.f64s(m.quaternion) && r.u8(m.button)) return m;
      return std::nullopt;
    }
    case Tag::SetForce: {
      SetForce m;
      if (r.f64s(m.force) && r.u8(m.force_class)) return m;
      return std::nullopt;
    }
    case Tag::EngageSelect: {
      EngageSelect m;
      if (r.str(m.entity_id)) return m;
      return std::nullopt;
    }
    case Tag::Release: return Release{};
    case Tag::SetScaleMode: {
      SetScaleMode m;
      if (r.u8(m.mode) && r.f64(m.value)) return m;
      return std::nullopt;
    }
    case Tag::SetFrameMode: {
      SetFrameMode m;
      std::uint8_t present = 0;
      if (!r.u8(m.mode) || !r.u8(present) || present > 1) return std::nullopt;
      if (present) {
        Pose7 f;
        if (!r.f64s(f)) return std::nullopt;
        m.frame = f;
      }
      return m;
    }
    case Tag::SceneSnapshot: {
      SceneSnapshot m;
      std::uint32_t n = 0;
      if (!r.u32(n)) return std::nullopt;
      // Each entry takes at least 2 + 56 bytes; reject impossible counts before reserving.
      if (static_cast<std::uint64_t>(n) * 58 > r.remaining()) return std::nullopt;
      m.poses.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        std::pair<std::string, Pose7> e;
        if (!r.str(e.first) || !r.f64s(e.second)) return std::nullopt;
        m.poses.push_back(std::move(e));
      }
      return m;
    }
    case Tag::Error: {
      Error m;
      if (r.u16(m.code) && r.str(m.text)) return m;
      return std::nullopt;
    }
    case Tag::Hello: {
      Hello m;
      if (r.u8(m.version)) return m;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

Tag tag_of(const Message& m) { return static_cast<Tag>(m.index() + 1); }

std::string_view name_of(Tag tag) {
  switch (tag) {
    case Tag::GetStylusPose: return "GetStylusPose";
    case Tag::StylusPose: return "StylusPose";
    case Tag::SetForce: return "SetForce";
    case Tag::EngageSelect: return "EngageSelect";
    case Tag::Release: return "Release";
    case Tag::SetScaleMode: return "SetScaleMode";
    case Tag::SetFrameMode: return "SetFrameMode";
    case Tag::SceneSnapshot: return "SceneSnapshot";
    case Tag::Error: return "Error";
    case Tag::Hello: return "Hello";
  }
  return "Unknown";
}

void encode_into(const Message& m, std::vector<std::uint8_t>& out) {
  const std::size_t start = out.size();
  out.resize(start + kHeaderSize);
  out.push_back(static_cast<std::uint8_t>(tag_of(m)));
  try {
    std::visit(PayloadWriter{out}, m);
  } catch (...) {
    out.resize(start);
    throw;
  }
  const std::size_t length = out.size() - start - kHeaderSize;
  if (length > kMaxFrameLength) {
    out.resize(start);
    throw EncodeError("frame exceeds 1 MiB");
  }
  for (int i = 0; i < 4; ++i) out[start + i] = static_cast<std::uint8_t>(length >> (8 * i));
}

std::vector<std::uint8_t> encode(const Message& m) {
  std::vector<std::uint8_t> out;
  encode_into(m, out);
  return out;
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
  Reader header(bytes);
  std::uint32_t length = 0;
  if (!header.u32(length)) return {};
  if (length > kMaxFrameLength) {
    DecodeResult r;
    r.status = DecodeStatus::TooLarge;
    r.error = {static_cast<std::uint16_t>(ErrorCode::FrameTooLarge),
               "frame length " + std::to_string(length) + " exceeds 1 MiB"};
    r.consumed = bytes.size();
    return r;
  }
  const std::size_t total = kHeaderSize + length;
  if (length == 0) return invalid(ErrorCode::BadPayload, "empty frame (no tag)", kHeaderSize);
  if (bytes.size() < total) return {};

  const std::uint8_t tag = bytes[kHeaderSize];
  if (tag < static_cast<std::uint8_t>(Tag::GetStylusPose) || tag > static_cast<std::uint8_t>(Tag::Hello)) {
    return invalid(ErrorCode::UnknownTag, "unknown message tag " + std::to_string(tag), total);
  }
  Reader body(bytes.subspan(kHeaderSize + 1, length - 1));
  auto msg = parse_payload(tag, body);
  const std::string name(name_of(static_cast<Tag>(tag)));
  if (!msg) return invalid(ErrorCode::BadPayload, "truncated " + name + " payload", total);
  if (body.remaining() != 0) return invalid(ErrorCode::BadPayload, "trailing bytes after " + name, total);

  DecodeResult r;
  r.status = DecodeStatus::Ok;
  r.message = std::move(msg);
  r.consumed = total;
  return r;
}

}  // namespace hapticsim::protocol
