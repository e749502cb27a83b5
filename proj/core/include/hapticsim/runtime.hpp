#pragma once

#include "hapticsim/recorder.hpp"
#include "hapticsim/session.hpp"

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace hapticsim::runtime {

enum class ClockKind { Simulated, WallClock };

struct RateConfig {
  int haptic_hz = 1000;
  int proximity_hz = 100;
  int publish_hz = 10;
  ClockKind clock = ClockKind::Simulated;

  /// haptic_hz >= proximity_hz >= publish_hz > 0.
  void validate() const;
};

/// True when a loop of `rate_hz` fires on haptic tick `tick`. Exact integer arithmetic, so
/// over any run of N ticks the loop fires floor((N*rate - 1)/haptic) + 1 times, never drifting.
constexpr bool fires(std::uint64_t tick, int rate_hz, int haptic_hz) {
  return (tick * static_cast<std::uint64_t>(rate_hz)) % static_cast<std::uint64_t>(haptic_hz) <
         static_cast<std::uint64_t>(rate_hz);
}

/// Haptic tick count of a run lasting `seconds`.
std::uint64_t ticks_for(double seconds, int haptic_hz);

/// Published scene state (the ~10 Hz display stream).
struct SceneSnapshot {
  std::uint64_t tick = 0;
  double t = 0.0;
  std::vector<std::pair<std::string, Pose>> poses;
  std::optional<geometry::ProximityResult> proximity;
  forcefield::ForceCommand force;  // last device force
  bool engaged = false;
};

/// Latest-value mailbox between a producer loop and a consumer thread. post() never waits for
/// the consumer: an unread snapshot is simply replaced.
class SnapshotChannel {
 public:
  using Consumer = std::function<void(const SceneSnapshot&)>;

  explicit SnapshotChannel(Consumer consumer);
  ~SnapshotChannel();
  SnapshotChannel(const SnapshotChannel&) = delete;
  SnapshotChannel& operator=(const SnapshotChannel&) = delete;

  void post(SceneSnapshot snapshot);
  /// Stops the consumer after it finishes the snapshot in hand; pending ones are dropped.
  void close();

  std::uint64_t posted() const;
  std::uint64_t delivered() const;
  std::uint64_t overwritten() const;

 private:
  void loop();

  Consumer consumer_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::optional<SceneSnapshot> pending_;
  bool closed_ = false;
  std::uint64_t posted_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t overwritten_ = 0;
  std::thread worker_;
};

struct JitterStats {
  std::uint64_t samples = 0;
  double mean_us = 0.0;  // mean lateness of tick start vs. its deadline
  double max_us = 0.0;
  double stddev_us = 0.0;
};

struct RunReport {
  std::uint64_t haptic_ticks = 0;
  std::uint64_t proximity_ticks = 0;
  std::uint64_t snapshots = 0;
  std::uint64_t snapshots_delivered = 0;
  double duration = 0.0;  // simulated seconds
  double force_max = 0.0;  // device force magnitude, N
  double force_mean = 0.0;
  std::uint64_t clamped = 0;
  std::optional<double> min_distance;  // over committed poses
  std::uint64_t commits = 0;
  std::uint64_t rejections = 0;
  std::uint64_t driver_errors = 0;
  std::vector<std::string> errors;  // first few driver error messages
  ClockKind clock = ClockKind::Simulated;
  double wall_seconds = 0.0;
  std::optional<JitterStats> jitter;  // wall-clock runs only
};

struct CommitRecord {
  std::uint64_t tick = 0;
  std::vector<std::pair<std::string, Pose>> poses;
  std::optional<double> distance;
};

struct ForceLogEntry {
  std::uint64_t tick = 0;
  Vec3 commanded = Vec3::Zero();  // scene-axes force before clamping
  Vec3 output = Vec3::Zero();     // device-axes force after clamping
  bool clamped = false;
};

using StylusSource = std::function<mapping::StylusState(std::uint64_t tick)>;

struct RunOptions {
  double duration = 1.0;  // s
  RateConfig rates;
  std::optional<RecordMode> record;
  SnapshotChannel::Consumer observer;  // runs on its own thread; may be slow
  /// Called at the start of every haptic tick (e.g. to apply queued mode commands).
  std::function<void(ManipulationSession&, std::uint64_t tick)> on_tick;
  bool log_forces = false;
  bool log_commits = true;
};

struct RunResult {
  RunReport report;
  std::optional<Trajectory> trajectory;
  std::vector<CommitRecord> commits;
  std::vector<ForceLogEntry> forces;
};

/// Runs the haptic, proximity and publish loops over `duration`. Every haptic tick samples
/// the stylus and renders the force from the last proximity result against the current
/// mapped pose; proximity ticks drive the entity and commit non-colliding poses; publish ticks
/// hand a snapshot to the observer without waiting for it.
RunResult run(ManipulationSession& session, const StylusSource& stylus, const RunOptions& options);

SceneSnapshot make_snapshot(const ManipulationSession& session, std::uint64_t tick, int haptic_hz,
                            const forcefield::ForceCommand& force);

std::string_view to_string(ClockKind kind);
std::optional<ClockKind> parse_clock(std::string_view s);

}  // namespace hapticsim::runtime
