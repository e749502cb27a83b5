#include "hapticsim/stylus_script.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hapticsim::protocol {

namespace {

std::uint64_t duration_ticks(double duration, int hz) {
  return static_cast<std::uint64_t>(std::llround(duration * hz));
}

}  // namespace

StylusScript::StylusScript(Pose start, std::vector<ScriptSegment> segments, std::vector<ButtonEvent> buttons,
                           int haptic_hz, mapping::DeviceSpec spec)
    : start_(std::move(start)),
      segments_(std::move(segments)),
      buttons_(std::move(buttons)),
      haptic_hz_(haptic_hz),
      spec_(std::move(spec)) {
  if (haptic_hz_ <= 0) throw std::invalid_argument("stylus script rate must be > 0");
  require_valid(start_, "stylus script start");
  std::stable_sort(buttons_.begin(), buttons_.end(),
                   [](const ButtonEvent& a, const ButtonEvent& b) { return a.tick < b.tick; });
  std::uint64_t first = 0;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const ScriptSegment& s = segments_[i];
    const std::string label = "stylus segment " + std::to_string(i);
    if (!(s.duration >= 0.0) || !std::isfinite(s.duration)) throw std::invalid_argument(label + ": bad duration");
    require_finite(s.target, label);
    require_finite(s.center, label);
    require_finite(s.amplitude, label);
    if (s.kind == SegmentKind::Arc && std::abs(s.axis.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument(label + ": arc axis must be a unit vector");
    }
    if (s.kind == SegmentKind::Line && std::abs(s.rotation.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument(label + ": rotation must be a unit quaternion");
    }
    segment_first_tick_.push_back(first);
    first += duration_ticks(s.duration, haptic_hz_);
  }
  // Start pose of each segment is the end pose of the previous one.
  Pose current = start_;
  for (const auto& seg : segments_) {
    segment_starts_.push_back(current);
    const std::uint64_t n = duration_ticks(seg.duration, haptic_hz_);
    current = evaluate(seg, current, n, n);
  }
}

std::uint64_t StylusScript::total_ticks() const {
  if (segments_.empty()) return 0;
  return segment_first_tick_.back() + duration_ticks(segments_.back().duration, haptic_hz_);
}

Pose StylusScript::evaluate(const ScriptSegment& s, const Pose& from, std::uint64_t k, std::uint64_t n) const {
  const double u = n == 0 ? 1.0 : static_cast<double>(k) / static_cast<double>(n);
  Pose p = from;
  switch (s.kind) {
    case SegmentKind::Hold: break;
    case SegmentKind::Line: {
      // Constant per-tick step so that equal tick spans give equal displacements.
      const Vec3 step = n == 0 ? Vec3::Zero() : Vec3((s.target - from.position) / static_cast<double>(n));
      p.position = k == n ? s.target : Vec3(from.position + step * static_cast<double>(k));
      if (s.rotation.coeffs() != from.orientation.coeffs()) {
        p.orientation = k == n ? s.rotation : from.orientation.slerp(u, s.rotation);
      }
      break;
    }
    case SegmentKind::Arc:
      p.position = s.center + Eigen::AngleAxisd(s.angle * u, s.axis) * (from.position - s.center);
      break;
    case SegmentKind::Sinusoid: {
      const double t = static_cast<double>(k) / haptic_hz_;
      p.position = from.position + s.amplitude * std::sin(2.0 * std::numbers::pi * s.frequency * t);
      break;
    }
  }
  return p;
}

Pose StylusScript::pose_at(std::uint64_t tick) const {
  if (segments_.empty()) return start_;
  const auto it = std::upper_bound(segment_first_tick_.begin(), segment_first_tick_.end(), tick);
  const auto i = static_cast<std::size_t>(std::distance(segment_first_tick_.begin(), it)) - 1;
  const std::uint64_t n = duration_ticks(segments_[i].duration, haptic_hz_);
  const std::uint64_t k = std::min<std::uint64_t>(tick - segment_first_tick_[i], n);
  return evaluate(segments_[i], segment_starts_[i], k, n);
}

bool StylusScript::button_at(std::uint64_t tick) const {
  bool pressed = false;
  for (const auto& e : buttons_) {
    if (e.tick > tick) break;
    pressed = e.pressed;
  }
  return pressed;
}

Vec3 StylusScript::raw_position(std::uint64_t tick) const { return pose_at(tick).position; }

mapping::StylusState StylusScript::sample(std::uint64_t tick) const {
  const Pose raw = pose_at(tick);
  mapping::StylusState s;
  s.pose.position = mapping::quantize(raw.position, spec_).position;
  s.pose.orientation = raw.orientation;
  s.button = button_at(tick);
  s.tick = tick;
  return s;
}

void StylusScript::validate() const {
  const std::uint64_t end = total_ticks();
  for (std::uint64_t t = 0; t <= end; ++t) {
    if (!spec_.contains(pose_at(t).position)) {
      throw std::invalid_argument("stylus script leaves the device workspace at tick " + std::to_string(t));
    }
  }
}

}  // namespace hapticsim::protocol
