#pragma once

#include "hapticsim/pose.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hapticsim::runtime {

enum class RecordKind { Manual, AutoTime, AutoDistance };

struct RecordMode {
  RecordKind kind = RecordKind::Manual;
  double value = 0.0;  // dt in s (AutoTime) or path length in m (AutoDistance)

  static RecordMode manual() { return {}; }
  static RecordMode auto_time(double dt) { return {RecordKind::AutoTime, dt}; }
  static RecordMode auto_distance(double d) { return {RecordKind::AutoDistance, d}; }
  void validate() const;
};

struct TrajectoryFrame {
  double t = 0.0;
  Pose pose;
  std::string entity_id;
};

/// Recorded frames, stored exactly as observed (never smoothed or resampled).
struct Trajectory {
  RecordMode mode;
  std::vector<TrajectoryFrame> frames;
};

/// Frame capture driven by explicit events (Manual) or by elapsed time / travelled
/// path length since the previous frame. The first frame is taken at arm, the final
/// pose at disarm.
class TrajectoryRecorder {
 public:
  /// Throws std::logic_error if already armed.
  void arm(const RecordMode& mode, double t, const Pose& pose, std::string entity_id);

  /// Rejected (std::logic_error) while armed; otherwise sets the mode for the next arm.
  void set_mode(const RecordMode& mode);

  /// Feeds the current pose; auto modes may append a frame. Returns true if one was added.
  bool observe(double t, const Pose& pose);

  /// Manual capture event. Throws std::logic_error when not armed.
  void capture(double t, const Pose& pose);

  /// Appends the final pose (unless it is the frame just taken) and returns the trajectory.
  Trajectory disarm(double t, const Pose& pose);

  bool armed() const { return armed_; }
  const RecordMode& mode() const { return mode_; }
  const Trajectory& trajectory() const { return trajectory_; }

 private:
  void append(double t, const Pose& pose);

  bool armed_ = false;
  RecordMode mode_;
  Trajectory trajectory_;
  std::string entity_id_;
  Pose last_seen_;
  double path_since_frame_ = 0.0;
};

struct TimedPose {
  double t = 0.0;
  Pose pose;
};

/// Records a whole pose stream: arms on the first sample, observes every sample (or
/// captures on the listed indices in Manual mode) and disarms on the last.
Trajectory record(const RecordMode& mode, const std::string& entity_id, std::span<const TimedPose> stream,
                  std::span<const std::size_t> manual_captures = {});

}  // namespace hapticsim::runtime
