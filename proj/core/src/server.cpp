#include "hapticsim/server.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <thread>

namespace hapticsim::protocol {

namespace {

Error error_msg(ErrorCode code, std::string text) { return {static_cast<std::uint16_t>(code), std::move(text)}; }

}  // namespace

StylusPose to_wire(const mapping::StylusState& s) {
  StylusPose m;
  m.tick = s.tick;
  m.position = {s.pose.position.x(), s.pose.position.y(), s.pose.position.z()};
  m.quaternion = {s.pose.orientation.w(), s.pose.orientation.x(), s.pose.orientation.y(), s.pose.orientation.z()};
  m.button = s.button ? 1 : 0;
  return m;
}

mapping::StylusState from_wire(const StylusPose& m) {
  mapping::StylusState s;
  s.tick = m.tick;
  s.pose.position = Vec3(m.position[0], m.position[1], m.position[2]);
  s.pose.orientation = Quat(m.quaternion[0], m.quaternion[1], m.quaternion[2], m.quaternion[3]);
  s.button = m.button != 0;
  return s;
}

Pose7 to_pose7(const Pose& p) {
  return {p.position.x(),    p.position.y(),    p.position.z(),   p.orientation.w(),
          p.orientation.x(), p.orientation.y(), p.orientation.z()};
}

Pose from_pose7(const Pose7& a) { return {Vec3(a[0], a[1], a[2]), Quat(a[3], a[4], a[5], a[6])}; }

SceneSnapshot to_wire(const runtime::SceneSnapshot& s) {
  SceneSnapshot m;
  for (const auto& [id, pose] : s.poses) m.poses.emplace_back(id, to_pose7(pose));
  return m;
}

HapticServer::HapticServer(runtime::StylusSource stylus, ServerConfig config)
    : stylus_(std::move(stylus)),
      config_(std::move(config)),
      governor_(config_.device.peak_force, config_.device.continuous_force, config_.rms_window) {
  if (!stylus_) throw std::invalid_argument("server requires a stylus source");
  config_.rates.validate();
  config_.device.validate();
  listener_ = net::listen_tcp(config_.host, config_.port);
  port_ = net::local_port(listener_);
  state_ = stylus_(0);
}

HapticServer::HapticServer(const StylusScript& script, ServerConfig config)
    : HapticServer([script](std::uint64_t k) { return script.sample(k); }, std::move(config)) {}

void HapticServer::queue(const Message& m) {
  encode_into(m, out_);
  ++stats_.frames_out;
}

void HapticServer::drop_client() {
  if (!client_.valid()) return;
  client_.close();
  in_.clear();
  out_.clear();
  ++stats_.disconnects;
  // A lost client can no longer correct its last command: stop pushing.
  set_commanded(Vec3::Zero(), 0);
  selected_.reset();
}

void HapticServer::set_commanded(const Vec3& force, std::uint8_t force_class) {
  commanded_ = force;
  commanded_class_ = force_class;
  log_next_ = true;
}

void HapticServer::handle(const Message& m) {
  if (on_message) on_message(m);
  std::visit(
      [&](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, GetStylusPose>) {
          queue(to_wire(state_));
        } else if constexpr (std::is_same_v<T, SetForce>) {
          const Vec3 f(msg.force[0], msg.force[1], msg.force[2]);
          if (msg.force_class < 1 || msg.force_class > 3) {
            queue(error_msg(ErrorCode::InvalidValue, "force class must be 1, 2 or 3"));
          } else if (!is_finite(f)) {
            queue(error_msg(ErrorCode::InvalidValue, "force must be finite"));
          } else {
            set_commanded(f, msg.force_class);
            last_set_force_tick_ = state_.tick;
          }
        } else if constexpr (std::is_same_v<T, EngageSelect>) {
          selected_ = msg.entity_id;
        } else if constexpr (std::is_same_v<T, Release>) {
          selected_.reset();
          set_commanded(Vec3::Zero(), 0);
        } else if constexpr (std::is_same_v<T, SceneSnapshot>) {
          snapshot_ = msg;
        } else if constexpr (std::is_same_v<T, Hello>) {
          if (msg.version != kProtocolVersion) {
            queue(error_msg(ErrorCode::VersionMismatch,
                            "server speaks protocol version " + std::to_string(kProtocolVersion)));
          } else {
            queue(Hello{});
          }
        } else if constexpr (std::is_same_v<T, SetScaleMode> || std::is_same_v<T, SetFrameMode> ||
                             std::is_same_v<T, Error>) {
          // Mapping lives on the simulation side; observers see these through on_message.
        } else {
          queue(error_msg(ErrorCode::Unsupported, std::string(name_of(tag_of(m))) + " is sent by the server only"));
        }
      },
      m);
}

void HapticServer::poll_network() {
  if (!client_.valid()) {
    client_ = net::try_accept(listener_);
    if (!client_.valid()) return;
    ++stats_.connections;
  }

  std::array<std::uint8_t, 4096> buf;
  std::size_t read = 0;
  while (read < config_.max_read_per_tick) {
    const auto r = net::recv_some(client_, buf);
    if (r.status == net::IoStatus::Closed) {
      drop_client();
      return;
    }
    if (r.status == net::IoStatus::WouldBlock) break;
    in_.insert(in_.end(), buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(r.bytes));
    read += r.bytes;
  }

  if (!in_.empty()) {
    const DecodeResult d = decode(in_);
    switch (d.status) {
      case DecodeStatus::NeedMoreBytes: break;
      case DecodeStatus::Ok:
        ++stats_.frames_in;
        in_.erase(in_.begin(), in_.begin() + static_cast<std::ptrdiff_t>(d.consumed));
        handle(*d.message);
        break;
      case DecodeStatus::Invalid:
        ++stats_.invalid_frames;
        in_.erase(in_.begin(), in_.begin() + static_cast<std::ptrdiff_t>(d.consumed));
        queue(d.error);
        break;
      case DecodeStatus::TooLarge:
        ++stats_.invalid_frames;
        in_.clear();
        queue(d.error);
        net::send_some(client_, out_);
        drop_client();
        return;
    }
  }

  if (!out_.empty()) {
    const auto w = net::send_some(client_, out_);
    if (w.status == net::IoStatus::Closed) {
      drop_client();
      return;
    }
    out_.erase(out_.begin(), out_.begin() + static_cast<std::ptrdiff_t>(w.bytes));
    if (out_.size() > config_.max_pending_output) drop_client();
  }
}

void HapticServer::step() {
  state_ = stylus_(stats_.ticks);
  state_.tick = stats_.ticks;
  poll_network();

  if (!config_.hold_last_force && commanded_class_ != 0 &&
      state_.tick - last_set_force_tick_ >= config_.stale_ticks) {
    set_commanded(Vec3::Zero(), 0);
  }

  forcefield::ForceCommand cmd;
  cmd.force = commanded_;
  if (commanded_class_ != 0) cmd.force_class = static_cast<forcefield::ForceClass>(commanded_class_);
  output_ = governor_.apply(cmd);
  stats_.max_output = std::max(stats_.max_output, output_.force.norm());
  if (output_.clamped) ++stats_.clamped_ticks;
  if (log_next_) {
    force_log_.push_back({state_.tick, commanded_, output_.force, output_.clamped, commanded_class_});
    log_next_ = false;
  }
  ++stats_.ticks;
}

void HapticServer::run_ticks(std::uint64_t ticks) {
  if (config_.rates.clock == runtime::ClockKind::Simulated) {
    for (std::uint64_t i = 0; i < ticks; ++i) step();
    return;
  }
  using clock = std::chrono::steady_clock;
  const auto period =
      std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / config_.rates.haptic_hz));
  const auto start = clock::now();
  double sum = 0, sq = 0, mx = 0;
  for (std::uint64_t i = 0; i < ticks; ++i) {
    const auto deadline = start + period * static_cast<clock::rep>(i);
    std::this_thread::sleep_until(deadline);
    const double late = std::chrono::duration<double, std::micro>(clock::now() - deadline).count();
    sum += late;
    sq += late * late;
    mx = std::max(mx, late);
    step();
  }
  if (ticks > 0) {
    runtime::JitterStats j;
    j.samples = ticks;
    j.mean_us = sum / static_cast<double>(ticks);
    j.max_us = mx;
    j.stddev_us = std::sqrt(std::max(0.0, sq / static_cast<double>(ticks) - j.mean_us * j.mean_us));
    jitter_ = j;
  }
}

HapticClient HapticClient::connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout,
                                   const std::function<void()>& pump) {
  HapticClient c(net::connect_tcp(host, port, timeout));
  c.send(Hello{});
  auto reply = c.receive(timeout, pump);
  if (!reply) throw ConnectionLost("no Hello from server at " + host + ":" + std::to_string(port));
  if (const auto* e = std::get_if<Error>(&*reply)) throw ConnectionLost("server refused session: " + e->text);
  if (!std::holds_alternative<Hello>(*reply)) throw ConnectionLost("unexpected reply to Hello");
  return c;
}

void HapticClient::send(const Message& m) {
  if (!socket_.valid()) throw ConnectionLost("not connected");
  const auto bytes = encode(m);
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const auto r = net::send_some(socket_, std::span(bytes).subspan(sent));
    if (r.status == net::IoStatus::Closed) {
      socket_.close();
      throw ConnectionLost("connection closed while sending");
    }
    if (r.status == net::IoStatus::WouldBlock) {
      net::wait_writable(socket_, std::chrono::milliseconds(10));
      continue;
    }
    sent += r.bytes;
  }
}

std::optional<Message> HapticClient::try_receive() {
  if (!socket_.valid()) throw ConnectionLost("not connected");
  for (;;) {
    const DecodeResult d = decode(in_);
    if (d.status == DecodeStatus::Ok) {
      in_.erase(in_.begin(), in_.begin() + static_cast<std::ptrdiff_t>(d.consumed));
      return d.message;
    }
    if (d.status == DecodeStatus::TooLarge) {
      socket_.close();
      throw ConnectionLost(d.error.text);
    }
    if (d.status == DecodeStatus::Invalid) {
      in_.erase(in_.begin(), in_.begin() + static_cast<std::ptrdiff_t>(d.consumed));
      return Message{d.error};
    }
    std::array<std::uint8_t, 4096> buf;
    const auto r = net::recv_some(socket_, buf);
    if (r.status == net::IoStatus::Closed) {
      socket_.close();
      throw ConnectionLost("connection closed by server");
    }
    if (r.status == net::IoStatus::WouldBlock) return std::nullopt;
    in_.insert(in_.end(), buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(r.bytes));
  }
}

std::optional<Message> HapticClient::receive(std::chrono::milliseconds timeout, const std::function<void()>& pump) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (auto m = try_receive()) return m;
    if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
    if (pump) {
      pump();
    } else {
      net::wait_readable(socket_, std::chrono::milliseconds(1));
    }
  }
}

CycleResult client_cycle(HapticClient& client, runtime::ManipulationSession& session, const CycleOptions& options) {
  CycleResult out;
  try {
    client.send(GetStylusPose{});
    std::optional<StylusPose> pose;
    const auto deadline = std::chrono::steady_clock::now() + options.timeout;
    while (!pose) {
      const auto left =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      auto m = client.receive(std::max(left, std::chrono::milliseconds(0)), options.pump);
      if (!m) {
        out.status = CycleStatus::Timeout;
        return out;
      }
      if (auto* p = std::get_if<StylusPose>(&*m)) pose = *p;
    }
    out.stylus = from_wire(*pose);
    session.update_stylus(*out.stylus);
    out.step = session.proximity_step();

    const auto force = session.haptic_force();
    const Vec3 device = session.device_to_scene().transpose() * force.scene.force;
    const bool in_zone = !device.isZero(0.0);
    if (in_zone || options.send_zero_force) {
      SetForce sf;
      sf.force = {device.x(), device.y(), device.z()};
      sf.force_class = static_cast<std::uint8_t>(force.scene.force_class);
      client.send(sf);
      out.sent = sf;
    }
  } catch (const ConnectionLost&) {
    session.release();
    out.status = CycleStatus::Disconnected;
  } catch (const net::NetError&) {
    session.release();
    out.status = CycleStatus::Disconnected;
  }
  return out;
}

}  // namespace hapticsim::protocol
