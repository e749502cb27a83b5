#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace hapticsim::net {

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Owning TCP socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { close(); }
  Socket(Socket&& o) noexcept : fd_(o.release()) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    const int f = fd_;
    fd_ = -1;
    return f;
  }
  void close();

 private:
  int fd_ = -1;
};

/// Listening socket bound to host:port (port 0 picks a free one), non-blocking.
/// Throws NetError naming the endpoint on failure.
Socket listen_tcp(const std::string& host, std::uint16_t port, int backlog = 4);
std::uint16_t local_port(const Socket& s);

/// Accepts one pending connection without waiting; returns an invalid socket if none.
/// The accepted socket is non-blocking with TCP_NODELAY.
Socket try_accept(const Socket& listener);

/// Connects with a timeout; the returned socket is non-blocking with TCP_NODELAY.
Socket connect_tcp(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout);

enum class IoStatus { Ok, WouldBlock, Closed };

struct IoResult {
  IoStatus status = IoStatus::Ok;
  std::size_t bytes = 0;
};

/// Single non-blocking recv/send; never waits. Errors other than EAGAIN count as Closed.
IoResult recv_some(const Socket& s, std::span<std::uint8_t> buffer);
IoResult send_some(const Socket& s, std::span<const std::uint8_t> data);

/// Waits up to `timeout` for readability (true) or writability.
bool wait_readable(const Socket& s, std::chrono::milliseconds timeout);
bool wait_writable(const Socket& s, std::chrono::milliseconds timeout);

/// "host:port" -> (host, port); a bare port means 127.0.0.1.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint);

}  // namespace hapticsim::net
