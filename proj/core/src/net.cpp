#include "hapticsim/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace hapticsim::net {

namespace {

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) {
    throw NetError(std::string("fcntl(O_NONBLOCK): ") + std::strerror(errno));
  }
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

struct AddrInfo {
  addrinfo* head = nullptr;
  ~AddrInfo() {
    if (head) ::freeaddrinfo(head);
  }
};

AddrInfo resolve(const std::string& host, std::uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  AddrInfo ai;
  const std::string service = std::to_string(port);
  const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &ai.head);
  if (rc != 0) throw NetError("cannot resolve " + host + ":" + service + ": " + ::gai_strerror(rc));
  return ai;
}

bool wait_for(const Socket& s, short events, std::chrono::milliseconds timeout) {
  pollfd p{s.fd(), events, 0};
  const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
  return rc > 0 && (p.revents & (events | POLLHUP | POLLERR)) != 0;
}

}  // namespace

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = o.release();
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Socket listen_tcp(const std::string& host, std::uint16_t port, int backlog) {
  const std::string where = host + ":" + std::to_string(port);
  AddrInfo ai = resolve(host, port, true);
  std::string last_error = "no address";
  for (addrinfo* a = ai.head; a; a = a->ai_next) {
    Socket s(::socket(a->ai_family, a->ai_socktype, a->ai_protocol));
    if (!s.valid()) {
      last_error = std::strerror(errno);
      continue;
    }
    int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(s.fd(), a->ai_addr, a->ai_addrlen) != 0 || ::listen(s.fd(), backlog) != 0) {
      last_error = std::strerror(errno);
      continue;
    }
    set_nonblocking(s.fd());
    return s;
  }
  throw NetError("cannot listen on " + where + ": " + last_error);
}

std::uint16_t local_port(const Socket& s) {
  sockaddr_storage ss{};
  socklen_t len = sizeof(ss);
  if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&ss), &len) != 0) {
    throw NetError(std::string("getsockname: ") + std::strerror(errno));
  }
  if (ss.ss_family == AF_INET) return ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
  return ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port);
}

Socket try_accept(const Socket& listener) {
  const int fd = ::accept(listener.fd(), nullptr, nullptr);
  if (fd < 0) return Socket{};
  Socket s(fd);
  set_nonblocking(fd);
  set_nodelay(fd);
  return s;
}

Socket connect_tcp(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout) {
  const std::string where = host + ":" + std::to_string(port);
  AddrInfo ai = resolve(host, port, false);
  std::string last_error = "no address";
  for (addrinfo* a = ai.head; a; a = a->ai_next) {
    Socket s(::socket(a->ai_family, a->ai_socktype, a->ai_protocol));
    if (!s.valid()) continue;
    set_nonblocking(s.fd());
    if (::connect(s.fd(), a->ai_addr, a->ai_addrlen) != 0) {
      if (errno != EINPROGRESS) {
        last_error = std::strerror(errno);
        continue;
      }
      if (!wait_for(s, POLLOUT, timeout)) {
        last_error = "timed out";
        continue;
      }
      int err = 0;
      socklen_t len = sizeof(err);
      ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
      if (err != 0) {
        last_error = std::strerror(err);
        continue;
      }
    }
    set_nodelay(s.fd());
    return s;
  }
  throw NetError("cannot connect to " + where + ": " + last_error);
}

IoResult recv_some(const Socket& s, std::span<std::uint8_t> buffer) {
  const ssize_t n = ::recv(s.fd(), buffer.data(), buffer.size(), MSG_DONTWAIT);
  if (n > 0) return {IoStatus::Ok, static_cast<std::size_t>(n)};
  if (n == 0) return {IoStatus::Closed, 0};
  if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) return {IoStatus::WouldBlock, 0};
  return {IoStatus::Closed, 0};
}

IoResult send_some(const Socket& s, std::span<const std::uint8_t> data) {
  if (data.empty()) return {IoStatus::Ok, 0};
  const ssize_t n = ::send(s.fd(), data.data(), data.size(), MSG_DONTWAIT | MSG_NOSIGNAL);
  if (n >= 0) return {IoStatus::Ok, static_cast<std::size_t>(n)};
  if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) return {IoStatus::WouldBlock, 0};
  return {IoStatus::Closed, 0};
}

bool wait_readable(const Socket& s, std::chrono::milliseconds timeout) { return wait_for(s, POLLIN, timeout); }
bool wait_writable(const Socket& s, std::chrono::milliseconds timeout) { return wait_for(s, POLLOUT, timeout); }

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint) {
  std::string host = "127.0.0.1";
  std::string port = endpoint;
  if (const auto colon = endpoint.rfind(':'); colon != std::string::npos) {
    host = endpoint.substr(0, colon);
    port = endpoint.substr(colon + 1);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  }
  char* end = nullptr;
  const long p = std::strtol(port.c_str(), &end, 10);
  if (port.empty() || *end != '\0' || p < 0 || p > 65535) throw NetError("invalid endpoint '" + endpoint + "'");
  return {host, static_cast<std::uint16_t>(p)};
}

}  // namespace hapticsim::net
