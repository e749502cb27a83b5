#include "hapticsim/recorder.hpp"

#include <cmath>
#include <stdexcept>

namespace hapticsim::runtime {

namespace {

// Sample times and path sums carry rounding; a threshold hit within this relative slack
// counts as reached so that e.g. t = 0.3 after t = 0.2 satisfies dt = 0.1.
constexpr double kThresholdSlack = 1e-9;

}  // namespace

void RecordMode::validate() const {
  if (kind != RecordKind::Manual && (!(value > 0.0) || !std::isfinite(value))) {
    throw std::invalid_argument("automatic recording interval must be > 0");
  }
}

void TrajectoryRecorder::arm(const RecordMode& mode, double t, const Pose& pose, std::string entity_id) {
  if (armed_) throw std::logic_error("recorder is already armed");
  mode.validate();
  mode_ = mode;
  entity_id_ = std::move(entity_id);
  trajectory_ = Trajectory{mode, {}};
  armed_ = true;
  append(t, pose);
}

void TrajectoryRecorder::set_mode(const RecordMode& mode) {
  if (armed_) throw std::logic_error("recording mode cannot change while armed");
  mode.validate();
  mode_ = mode;
}

void TrajectoryRecorder::append(double t, const Pose& pose) {
  trajectory_.frames.push_back({t, pose, entity_id_});
  last_seen_ = pose;
  path_since_frame_ = 0.0;
}

bool TrajectoryRecorder::observe(double t, const Pose& pose) {
  if (!armed_) return false;
  const double last_t = trajectory_.frames.back().t;
  path_since_frame_ += (pose.position - last_seen_.position).norm();
  last_seen_ = pose;
  if (!(t > last_t)) return false;
  switch (mode_.kind) {
    case RecordKind::Manual: return false;
    case RecordKind::AutoTime:
      if (t - last_t >= mode_.value * (1.0 - kThresholdSlack)) {
        append(t, pose);
        return true;
      }
      return false;
    case RecordKind::AutoDistance:
      if (path_since_frame_ >= mode_.value * (1.0 - kThresholdSlack)) {
        append(t, pose);
        return true;
      }
      return false;
  }
  return false;
}

void TrajectoryRecorder::capture(double t, const Pose& pose) {
  if (!armed_) throw std::logic_error("recorder is not armed");
  if (t > trajectory_.frames.back().t) append(t, pose);
}

Trajectory TrajectoryRecorder::disarm(double t, const Pose& pose) {
  if (!armed_) throw std::logic_error("recorder is not armed");
  if (t > trajectory_.frames.back().t) append(t, pose);
  armed_ = false;
  return trajectory_;
}

Trajectory record(const RecordMode& mode, const std::string& entity_id, std::span<const TimedPose> stream,
                  std::span<const std::size_t> manual_captures) {
  if (stream.empty()) throw std::invalid_argument("cannot record an empty pose stream");
  TrajectoryRecorder rec;
  rec.arm(mode, stream.front().t, stream.front().pose, entity_id);
  std::size_t next_capture = 0;
  for (std::size_t i = 1; i + 1 < stream.size(); ++i) {
    rec.observe(stream[i].t, stream[i].pose);
    while (next_capture < manual_captures.size() && manual_captures[next_capture] < i) ++next_capture;
    if (mode.kind == RecordKind::Manual && next_capture < manual_captures.size() &&
        manual_captures[next_capture] == i) {
      rec.capture(stream[i].t, stream[i].pose);
    }
  }
  return rec.disarm(stream.back().t, stream.back().pose);
}

}  // namespace hapticsim::runtime
