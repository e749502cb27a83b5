#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace hapticsim::protocol {

/// Frame layout: u32 little-endian length L, then L bytes = 1-byte tag + payload.
/// Payload fields follow declaration order; integers little-endian, reals IEEE-754 f64 LE,
/// strings u16 length + raw bytes.
inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kMaxFrameLength = 1u << 20;  // 1 MiB, tag included
inline constexpr std::size_t kHeaderSize = 4;

enum class Tag : std::uint8_t {
  GetStylusPose = 1,
  StylusPose = 2,
  SetForce = 3,
  EngageSelect = 4,
  Release = 5,
  SetScaleMode = 6,
  SetFrameMode = 7,
  SceneSnapshot = 8,
  Error = 9,
  Hello = 10,
};

enum class ErrorCode : std::uint16_t {
  UnknownTag = 1,
  BadPayload = 2,      // wrong size for the tag, or trailing bytes
  FrameTooLarge = 3,
  InvalidValue = 4,    // well-formed but out of range (e.g. force class 7)
  Unsupported = 5,     // message not meaningful in this direction
  VersionMismatch = 6,
};

using Pose7 = std::array<double, 7>;  // x, y, z, qw, qx, qy, qz

struct GetStylusPose {
  bool operator==(const GetStylusPose&) const = default;
};
struct StylusPose {
  std::uint64_t tick = 0;
  std::array<double, 3> position{};
  std::array<double, 4> quaternion{1.0, 0.0, 0.0, 0.0};  // w, x, y, z
  std::uint8_t button = 0;
  bool operator==(const StylusPose&) const = default;
};
struct SetForce {
  std::array<double, 3> force{};
  std::uint8_t force_class = 2;
  bool operator==(const SetForce&) const = default;
};
struct EngageSelect {
  std::string entity_id;
  bool operator==(const EngageSelect&) const = default;
};
struct Release {
  bool operator==(const Release&) const = default;
};
struct SetScaleMode {
  std::uint8_t mode = 1;
  double value = 0.0;  // level value, viewport extent (screen-adaptive), or 0 to keep
  bool operator==(const SetScaleMode&) const = default;
};
struct SetFrameMode {
  std::uint8_t mode = 0;
  std::optional<Pose7> frame;  // user-defined frame; encoded as presence byte + 7 f64
  bool operator==(const SetFrameMode&) const = default;
};
struct SceneSnapshot {
  std::vector<std::pair<std::string, Pose7>> poses;
  bool operator==(const SceneSnapshot&) const = default;
};
struct Error {
  std::uint16_t code = 0;
  std::string text;
  bool operator==(const Error&) const = default;
};
struct Hello {
  std::uint8_t version = kProtocolVersion;
  bool operator==(const Hello&) const = default;
};

using Message = std::variant<GetStylusPose, StylusPose, SetForce, EngageSelect, Release, SetScaleMode,
                             SetFrameMode, SceneSnapshot, Error, Hello>;

Tag tag_of(const Message& m);
std::string_view name_of(Tag tag);

class EncodeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Complete frame (header + tag + payload). Throws EncodeError when a string exceeds
/// 65535 bytes or the frame exceeds kMaxFrameLength.
std::vector<std::uint8_t> encode(const Message& m);
void encode_into(const Message& m, std::vector<std::uint8_t>& out);

enum class DecodeStatus {
  Ok,
  NeedMoreBytes,  // header or body incomplete; consumed = 0
  Invalid,        // frame skipped; `error` describes it
  TooLarge,       // declared length beyond kMaxFrameLength; the stream cannot be resynchronised
};

struct DecodeResult {
  DecodeStatus status = DecodeStatus::NeedMoreBytes;
  std::optional<Message> message;  // Ok only
  Error error;                     // Invalid / TooLarge
  std::size_t consumed = 0;        // bytes to drop from the front of the buffer
};

/// Decodes the first frame of `bytes`. Never throws and never reads past the span.
DecodeResult decode(std::span<const std::uint8_t> bytes);

/// Little-endian byte order helpers, exposed for golden-vector tests.
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v);
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_f64(std::vector<std::uint8_t>& out, double v);

}  // namespace hapticsim::protocol
