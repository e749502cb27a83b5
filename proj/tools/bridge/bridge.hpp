#pragma once

#include "hapticsim/io.hpp"
#include "hapticsim/net.hpp"
#include "hapticsim/recorder.hpp"
#include "hapticsim/runtime.hpp"
#include "hapticsim/session.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hapticsim::bridge {

/// JSON face of a manipulation session for browser clients. Owns the session and drives it
/// one haptic tick at a time; every number the UI shows comes from here.
///
/// Client -> bridge: {"type": "hello"} | {"type": "stylus", "position", "quaternion", "button"}
///   | {"type": "mode", "scale"?, "scale_value"?, "frame"?, "user_frame"?, "pivot"?,
///      "force_class"?, "force_enabled"?, "camera"?, "viewport_extent"?}
///   | {"type": "record", "action": "arm" | "disarm" | "capture", "mode"?, "value"?}
/// Bridge -> client: "scene", "snapshot", "ack", "trajectory", "error".
class BridgeCore {
 public:
  explicit BridgeCore(io::Scenario scenario);

  /// One haptic tick; returns the messages to broadcast (a snapshot on publish ticks).
  std::vector<std::string> tick();

  /// Handles one client text message; returns the replies for that client.
  std::vector<std::string> handle(const std::string& text);

  /// Static description of the loaded scene (entities with their hull vertices).
  std::string scene_message() const;
  std::string snapshot_message() const;

  std::uint64_t ticks() const { return tick_; }
  bool external_stylus() const { return !script_; }
  const runtime::ManipulationSession& session() const { return session_; }
  const runtime::RateConfig& rates() const { return rates_; }
  const runtime::TrajectoryRecorder& recorder() const { return recorder_; }

 private:
  std::string ack(const std::string& command) const;
  std::string error(const std::string& message) const;

  io::Scenario scenario_;
  runtime::RateConfig rates_;
  runtime::ManipulationSession session_;
  std::optional<protocol::StylusScript> script_;
  mapping::StylusState external_;
  std::uint64_t tick_ = 0;
  runtime::TrajectoryRecorder recorder_;
  forcefield::ForceCommand last_force_;
};

struct BridgeServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;
  std::optional<std::filesystem::path> static_dir;  // serves the UI bundle for plain GETs
};

/// Single-threaded WebSocket server polled once per haptic tick, like the haptic server:
/// nothing in step() waits on a socket.
class BridgeServer {
 public:
  BridgeServer(BridgeCore& core, BridgeServerOptions options);
  ~BridgeServer();

  std::uint16_t port() const { return port_; }
  void step();
  std::size_t clients() const;

 private:
  struct Client;
  void poll_client(Client& c);

  BridgeCore& core_;
  BridgeServerOptions options_;
  net::Socket listener_;
  std::uint16_t port_ = 0;
  std::vector<std::unique_ptr<Client>> clients_;
};

}  // namespace hapticsim::bridge
