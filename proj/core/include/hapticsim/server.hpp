#pragma once

#include "hapticsim/forcefield.hpp"
#include "hapticsim/mapping.hpp"
#include "hapticsim/net.hpp"
#include "hapticsim/runtime.hpp"
#include "hapticsim/stylus_script.hpp"
#include "hapticsim/wire.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hapticsim::protocol {

struct ServerConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  runtime::RateConfig rates;
  mapping::DeviceSpec device;
  std::size_t rms_window = 1000;
  /// Between SetForce messages the last force is held. With hold_last_force=false the force
  /// drops to zero after `stale_ticks` ticks without a SetForce.
  bool hold_last_force = true;
  std::uint64_t stale_ticks = 100;
  std::size_t max_read_per_tick = 64 * 1024;
  std::size_t max_pending_output = 4u << 20;  // a client that never reads is dropped past this
};

/// One entry per change of the commanded force (SetForce, staleness, disconnect).
struct ForceLogRecord {
  std::uint64_t tick = 0;
  Vec3 commanded = Vec3::Zero();
  Vec3 output = Vec3::Zero();  // after peak clamp + RMS governor, as sent to the motors
  bool clamped = false;
  std::uint8_t force_class = 0;
};

struct ServerStats {
  std::uint64_t ticks = 0;
  std::uint64_t frames_in = 0;
  std::uint64_t frames_out = 0;
  std::uint64_t invalid_frames = 0;
  std::uint64_t connections = 0;
  std::uint64_t disconnects = 0;
  double max_output = 0.0;   // N, over every tick
  std::uint64_t clamped_ticks = 0;
};

/// Haptic-loop server behind the virtual stylus. Each step() is one haptic tick: sample the
/// stylus, poll the socket (at most one frame decoded and one reply queued), and push the
/// held force through the device clamp. Nothing in a step waits on the network.
class HapticServer {
 public:
  /// Binds immediately; throws net::NetError when the endpoint is unavailable.
  HapticServer(runtime::StylusSource stylus, ServerConfig config);
  HapticServer(const StylusScript& script, ServerConfig config);

  std::uint16_t port() const { return port_; }
  const ServerConfig& config() const { return config_; }

  void step();
  /// Runs `ticks` steps, paced to the wall clock in WallClock mode.
  void run_ticks(std::uint64_t ticks);
  void run_for(double seconds) { run_ticks(runtime::ticks_for(seconds, config_.rates.haptic_hz)); }

  std::uint64_t tick() const { return stats_.ticks; }
  const mapping::StylusState& current_state() const { return state_; }
  const forcefield::ForceCommand& current_output() const { return output_; }
  const std::vector<ForceLogRecord>& force_log() const { return force_log_; }
  const ServerStats& stats() const { return stats_; }
  bool client_connected() const { return client_.valid(); }
  const std::optional<SceneSnapshot>& last_snapshot() const { return snapshot_; }
  const std::optional<std::string>& selected_entity() const { return selected_; }
  std::optional<runtime::JitterStats> jitter() const { return jitter_; }

  /// Invoked (on the server thread) for every decoded client message.
  std::function<void(const Message&)> on_message;

 private:
  void poll_network();
  void handle(const Message& m);
  void queue(const Message& m);
  void drop_client();
  void set_commanded(const Vec3& force, std::uint8_t force_class);

  runtime::StylusSource stylus_;
  ServerConfig config_;
  net::Socket listener_;
  net::Socket client_;
  std::uint16_t port_ = 0;
  std::vector<std::uint8_t> in_;
  std::vector<std::uint8_t> out_;
  mapping::StylusState state_;
  Vec3 commanded_ = Vec3::Zero();
  std::uint8_t commanded_class_ = 0;
  std::uint64_t last_set_force_tick_ = 0;
  bool log_next_ = false;
  forcefield::RmsGovernor governor_;
  forcefield::ForceCommand output_;
  std::vector<ForceLogRecord> force_log_;
  ServerStats stats_;
  std::optional<SceneSnapshot> snapshot_;
  std::optional<std::string> selected_;
  std::optional<runtime::JitterStats> jitter_;
};

class ConnectionLost : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simulation-side connection to a HapticServer.
class HapticClient {
 public:
  /// Connects and exchanges Hello. Throws net::NetError / ConnectionLost.
  static HapticClient connect(const std::string& host, std::uint16_t port,
                              std::chrono::milliseconds timeout = std::chrono::milliseconds(2000),
                              const std::function<void()>& pump = {});

  void send(const Message& m);
  /// Next message, or nullopt when none arrives in time. `pump` is called between polls
  /// (lets a single thread drive an in-process server).
  std::optional<Message> receive(std::chrono::milliseconds timeout, const std::function<void()>& pump = {});
  std::optional<Message> try_receive();

  bool connected() const { return socket_.valid(); }
  void close() { socket_.close(); }

 private:
  explicit HapticClient(net::Socket s) : socket_(std::move(s)) {}
  net::Socket socket_;
  std::vector<std::uint8_t> in_;
};

enum class CycleStatus { Ok, Timeout, Disconnected };

struct CycleOptions {
  std::chrono::milliseconds timeout{1000};
  std::function<void()> pump;
  bool send_zero_force = true;  // free space: explicitly cancel the held force
};

struct CycleResult {
  CycleStatus status = CycleStatus::Ok;
  std::optional<mapping::StylusState> stylus;
  runtime::ProximityStep step;
  std::optional<SetForce> sent;
};

/// One client cycle: request the stylus pose, map it, drive the entity, run proximity,
/// commit when free, and send the force for the new result. On connection loss the session is
/// released (clutch out) and its committed state kept; motion resumes after a fresh engage.
CycleResult client_cycle(HapticClient& client, runtime::ManipulationSession& session,
                         const CycleOptions& options = {});

/// Wire conversions.
StylusPose to_wire(const mapping::StylusState& s);
mapping::StylusState from_wire(const StylusPose& m);
Pose7 to_pose7(const Pose& p);
Pose from_pose7(const Pose7& a);
SceneSnapshot to_wire(const runtime::SceneSnapshot& s);

}  // namespace hapticsim::protocol
