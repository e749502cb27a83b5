#include "websocket.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <cctype>
#include <sstream>

namespace hapticsim::bridge::ws {

namespace {

constexpr const char* kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_control(Opcode op) { return static_cast<std::uint8_t>(op) >= 8; }

bool known(std::uint8_t op) { return op <= 2 || (op >= 8 && op <= 10); }

}  // namespace

std::string base64(std::span<const std::uint8_t> data) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < data.size(); i += 3) {
    const std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (const std::size_t rest = data.size() - i; rest > 0) {
    std::uint32_t v = data[i] << 16;
    if (rest == 2) v |= data[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string accept_key(const std::string& client_key) {
  const std::string s = client_key + kGuid;
  std::uint8_t digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(s.data()), s.size(), digest);
  return base64(digest);
}

std::vector<std::uint8_t> encode_frame(Opcode op, const std::string& payload, std::optional<std::uint32_t> mask) {
  std::vector<std::uint8_t> out;
  out.reserve(payload.size() + 14);
  out.push_back(static_cast<std::uint8_t>(0x80 | static_cast<std::uint8_t>(op)));
  const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
  const std::uint64_t n = payload.size();
  if (n < 126) {
    out.push_back(static_cast<std::uint8_t>(mask_bit | n));
  } else if (n <= 0xFFFF) {
    out.push_back(mask_bit | 126);
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n));
  } else {
    out.push_back(mask_bit | 127);
    for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(n >> s));
  }
  if (!mask) {
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
  }
  const std::uint8_t key[4] = {static_cast<std::uint8_t>(*mask >> 24), static_cast<std::uint8_t>(*mask >> 16),
                               static_cast<std::uint8_t>(*mask >> 8), static_cast<std::uint8_t>(*mask)};
  out.insert(out.end(), key, key + 4);
  for (std::size_t i = 0; i < payload.size(); ++i) {
    out.push_back(static_cast<std::uint8_t>(payload[i]) ^ key[i % 4]);
  }
  return out;
}

ParseResult parse_frame(std::span<const std::uint8_t> data, bool require_mask) {
  ParseResult r;
  auto fail = [&](std::string why) {
    r.status = ParseStatus::Error;
    r.error = std::move(why);
    return r;
  };
  if (data.size() < 2) return r;
  const std::uint8_t b0 = data[0], b1 = data[1];
  if (b0 & 0x70) return fail("reserved bits set");
  if (!known(b0 & 0x0F)) return fail("unknown opcode");
  r.frame.fin = (b0 & 0x80) != 0;
  r.frame.opcode = static_cast<Opcode>(b0 & 0x0F);
  const bool masked = (b1 & 0x80) != 0;
  if (require_mask && !masked) return fail("client frame not masked");

  std::size_t pos = 2;
  std::uint64_t n = b1 & 0x7F;
  if (n == 126) {
    if (data.size() < 4) return r;
    n = (std::uint64_t{data[2]} << 8) | data[3];
    pos = 4;
  } else if (n == 127) {
    if (data.size() < 10) return r;
    n = 0;
    for (int i = 0; i < 8; ++i) n = (n << 8) | data[2 + i];
    pos = 10;
  }
  if (is_control(r.frame.opcode) && (n > 125 || !r.frame.fin)) return fail("bad control frame");
  if (n > kMaxPayload) return fail("frame too large");

  std::uint8_t key[4] = {0, 0, 0, 0};
  if (masked) {
    if (data.size() < pos + 4) return r;
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(pos), 4, key);
    pos += 4;
  }
  if (data.size() < pos + n) return r;
  r.frame.payload.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.frame.payload[i] = static_cast<char>(data[pos + i] ^ key[i % 4]);
  }
  r.consumed = pos + n;
  r.status = ParseStatus::Ok;
  return r;
}

std::optional<std::string> HttpRequest::header(const std::string& lower_name) const {
  for (const auto& [k, v] : headers) {
    if (k == lower_name) return v;
  }
  return std::nullopt;
}

bool HttpRequest::is_websocket_upgrade() const {
  const auto up = header("upgrade");
  const auto conn = header("connection");
  return method == "GET" && up && lower(*up) == "websocket" && conn &&
         lower(*conn).find("upgrade") != std::string::npos && header("sec-websocket-key").has_value();
}

std::optional<HttpRequest> parse_request(const std::string& head) {
  if (head.find("\r\n\r\n") == std::string::npos) return std::nullopt;
  std::istringstream in(head);
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  HttpRequest req;
  std::istringstream first(trim(line));
  std::string version;
  if (!(first >> req.method >> req.target >> version) || version.rfind("HTTP/1.", 0) != 0) return std::nullopt;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) break;
    const auto colon = line.find(':');
    if (colon == std::string::npos) return std::nullopt;
    req.headers.emplace_back(lower(trim(line.substr(0, colon))), trim(line.substr(colon + 1)));
  }
  return req;
}

std::string handshake_response(const std::string& client_key) {
  return "HTTP/1.1 101 Switching Protocols\r\n"
         "Upgrade: websocket\r\n"
         "Connection: Upgrade\r\n"
         "Sec-WebSocket-Accept: " +
         accept_key(client_key) + "\r\n\r\n";
}

}  // namespace hapticsim::bridge::ws
