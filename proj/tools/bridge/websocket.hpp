#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hapticsim::bridge::ws {

enum class Opcode : std::uint8_t { Continuation = 0, Text = 1, Binary = 2, Close = 8, Ping = 9, Pong = 10 };

struct Frame {
  bool fin = true;
  Opcode opcode = Opcode::Text;
  std::string payload;
};

inline constexpr std::size_t kMaxPayload = 1u << 20;

/// Sec-WebSocket-Accept value for a client key.
std::string accept_key(const std::string& client_key);

std::string base64(std::span<const std::uint8_t> data);

/// Server frames are unmasked; client frames carry `mask`.
std::vector<std::uint8_t> encode_frame(Opcode op, const std::string& payload,
                                       std::optional<std::uint32_t> mask = std::nullopt);

enum class ParseStatus { Ok, NeedMore, Error };

struct ParseResult {
  ParseStatus status = ParseStatus::NeedMore;
  Frame frame;
  std::size_t consumed = 0;
  std::string error;
};

/// Parses one frame. `require_mask` enforces the client-to-server masking rule.
ParseResult parse_frame(std::span<const std::uint8_t> data, bool require_mask);

struct HttpRequest {
  std::string method;
  std::string target;
  std::vector<std::pair<std::string, std::string>> headers;  // lower-cased names

  std::optional<std::string> header(const std::string& lower_name) const;
  bool is_websocket_upgrade() const;
};

/// Parses a request head ending in CRLFCRLF; nullopt while incomplete or malformed.
std::optional<HttpRequest> parse_request(const std::string& head);

std::string handshake_response(const std::string& client_key);

}  // namespace hapticsim::bridge::ws
