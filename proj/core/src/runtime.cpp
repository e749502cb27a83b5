#include "hapticsim/runtime.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hapticsim::runtime {

void RateConfig::validate() const {
  if (!(publish_hz > 0 && proximity_hz >= publish_hz && haptic_hz >= proximity_hz)) {
    throw std::invalid_argument("rates must satisfy haptic_hz >= proximity_hz >= publish_hz > 0");
  }
}

std::uint64_t ticks_for(double seconds, int haptic_hz) {
  if (!(seconds >= 0.0) || !std::isfinite(seconds)) throw std::invalid_argument("duration must be >= 0");
  // Durations are given in decimal seconds; round instead of truncating 0.3 * 1000 = 299.99...
  return static_cast<std::uint64_t>(std::llround(seconds * haptic_hz));
}

SnapshotChannel::SnapshotChannel(Consumer consumer) : consumer_(std::move(consumer)) {
  if (consumer_) worker_ = std::thread([this] { loop(); });
}

SnapshotChannel::~SnapshotChannel() { close(); }

void SnapshotChannel::post(SceneSnapshot snapshot) {
  {
    std::lock_guard lock(mutex_);
    ++posted_;
    if (closed_ || !consumer_) return;
    if (pending_) ++overwritten_;
    pending_ = std::move(snapshot);
  }
  cv_.notify_one();
}

void SnapshotChannel::close() {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    closed_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void SnapshotChannel::loop() {
  for (;;) {
    SceneSnapshot snap;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return closed_ || pending_.has_value(); });
      if (closed_) return;
      snap = std::move(*pending_);
      pending_.reset();
    }
    consumer_(snap);
    std::lock_guard lock(mutex_);
    ++delivered_;
  }
}

std::uint64_t SnapshotChannel::posted() const {
  std::lock_guard lock(mutex_);
  return posted_;
}

std::uint64_t SnapshotChannel::delivered() const {
  std::lock_guard lock(mutex_);
  return delivered_;
}

std::uint64_t SnapshotChannel::overwritten() const {
  std::lock_guard lock(mutex_);
  return overwritten_;
}

SceneSnapshot make_snapshot(const ManipulationSession& session, std::uint64_t tick, int haptic_hz,
                            const forcefield::ForceCommand& force) {
  SceneSnapshot s;
  s.tick = tick;
  s.t = static_cast<double>(tick) / haptic_hz;
  for (const auto& e : session.scene().entities()) s.poses.emplace_back(e.id, e.pose);
  s.proximity = session.last_proximity();
  s.force = force;
  s.engaged = session.engaged();
  return s;
}

namespace {

constexpr std::size_t kMaxLoggedErrors = 16;

class JitterMeter {
 public:
  void add(double us) {
    ++n_;
    sum_ += us;
    sq_ += us * us;
    max_ = std::max(max_, us);
  }
  JitterStats stats() const {
    JitterStats s;
    s.samples = n_;
    if (n_ == 0) return s;
    s.mean_us = sum_ / static_cast<double>(n_);
    s.max_us = max_;
    s.stddev_us = std::sqrt(std::max(0.0, sq_ / static_cast<double>(n_) - s.mean_us * s.mean_us));
    return s;
  }

 private:
  std::uint64_t n_ = 0;
  double sum_ = 0.0, sq_ = 0.0, max_ = 0.0;
};

}  // namespace

RunResult run(ManipulationSession& session, const StylusSource& stylus, const RunOptions& options) {
  options.rates.validate();
  if (options.rates.haptic_hz != session.config().haptic_hz) {
    throw std::invalid_argument("session and run disagree on the haptic rate");
  }
  if (!stylus) throw std::invalid_argument("run requires a stylus source");
  const int hz = options.rates.haptic_hz;
  const std::uint64_t n = ticks_for(options.duration, hz);

  RunResult out;
  RunReport& rep = out.report;
  rep.clock = options.rates.clock;
  rep.duration = static_cast<double>(n) / hz;

  TrajectoryRecorder recorder;
  if (options.record) recorder.arm(*options.record, 0.0, session.committed_pose(), session.primary_id());

  SnapshotChannel channel(options.observer);
  JitterMeter jitter;
  double force_sum = 0.0;
  forcefield::ForceCommand last_force;

  auto note_error = [&](const std::string& msg) {
    ++rep.driver_errors;
    if (rep.errors.size() < kMaxLoggedErrors) rep.errors.push_back(msg);
  };

  using clock = std::chrono::steady_clock;
  const auto wall_start = clock::now();
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / hz));

  for (std::uint64_t k = 0; k < n; ++k) {
    if (rep.clock == ClockKind::WallClock) {
      const auto deadline = wall_start + period * static_cast<clock::rep>(k);
      std::this_thread::sleep_until(deadline);
      jitter.add(std::chrono::duration<double, std::micro>(clock::now() - deadline).count());
    }
    const double t = static_cast<double>(k) / hz;

    // Haptic loop: sample, (proximity,) force.
    if (options.on_tick) options.on_tick(session, k);
    try {
      session.update_stylus(stylus(k));
    } catch (const std::exception& e) {
      note_error(e.what());
    }

    if (fires(k, options.rates.proximity_hz, hz)) {
      ++rep.proximity_ticks;
      const ProximityStep step = session.proximity_step();
      if (step.driver_error) note_error(*step.driver_error);
      if (step.rejected) ++rep.rejections;
      if (step.committed) {
        ++rep.commits;
        std::optional<double> d;
        if (step.result) {
          d = step.result->distance;
          rep.min_distance = rep.min_distance ? std::min(*rep.min_distance, *d) : *d;
        }
        if (options.log_commits) {
          CommitRecord c{k, {}, d};
          for (const auto& id : session.manipulated_ids()) c.poses.emplace_back(id, session.scene().entity(id).pose);
          out.commits.push_back(std::move(c));
        }
      }
      if (recorder.armed()) recorder.observe(t, session.committed_pose());
    }

    ForceSample f;
    try {
      f = session.haptic_force();
    } catch (const std::exception& e) {
      note_error(e.what());
    }
    last_force = f.device;
    const double mag = f.device.force.norm();
    rep.force_max = std::max(rep.force_max, mag);
    force_sum += mag;
    if (f.device.clamped) ++rep.clamped;
    if (options.log_forces) out.forces.push_back({k, f.scene.force, f.device.force, f.device.clamped});
    ++rep.haptic_ticks;

    if (fires(k, options.rates.publish_hz, hz)) {
      ++rep.snapshots;
      channel.post(make_snapshot(session, k, hz, last_force));
    }
  }
  channel.close();

  rep.snapshots_delivered = channel.delivered();
  rep.force_mean = n > 0 ? force_sum / static_cast<double>(n) : 0.0;
  rep.wall_seconds = std::chrono::duration<double>(clock::now() - wall_start).count();
  if (rep.clock == ClockKind::WallClock) rep.jitter = jitter.stats();
  if (recorder.armed()) out.trajectory = recorder.disarm(rep.duration, session.committed_pose());
  return out;
}

std::string_view to_string(ClockKind kind) { return kind == ClockKind::Simulated ? "simulated" : "wallclock"; }

std::optional<ClockKind> parse_clock(std::string_view s) {
  if (s == "simulated") return ClockKind::Simulated;
  if (s == "wallclock" || s == "wall" || s == "wall-clock") return ClockKind::WallClock;
  return std::nullopt;
}

}  // namespace hapticsim::runtime
