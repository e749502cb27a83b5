#pragma once

#include "hapticsim/mapping.hpp"

#include <cstdint>
#include <vector>

namespace hapticsim::protocol {

enum class SegmentKind { Hold, Line, Arc, Sinusoid };

/// One motion segment of a scripted stylus, starting where the previous one ended.
///   Hold:     stays put for `duration`.
///   Line:     moves linearly to `target`.
///   Arc:      rotates the position about the axis through `center` by `angle` rad.
///   Sinusoid: offsets by amplitude * sin(2*pi*frequency*t) from the start point.
/// `rotation` (Line only) is the orientation reached at the end, slerped along the way.
struct ScriptSegment {
  SegmentKind kind = SegmentKind::Hold;
  double duration = 0.0;  // s
  Vec3 target = Vec3::Zero();
  Vec3 center = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double angle = 0.0;
  Vec3 amplitude = Vec3::Zero();
  double frequency = 0.0;
  Quat rotation = Quat::Identity();
};

struct ButtonEvent {
  std::uint64_t tick = 0;
  bool pressed = false;
};

/// Deterministic virtual stylus standing in for the physical device.
class StylusScript {
 public:
  StylusScript() = default;
  StylusScript(Pose start, std::vector<ScriptSegment> segments, std::vector<ButtonEvent> buttons,
               int haptic_hz = 1000, mapping::DeviceSpec spec = {});

  /// Quantized device state at `tick`. Past the last segment the final pose is held.
  mapping::StylusState sample(std::uint64_t tick) const;

  /// Raw (unquantized) position at `tick`.
  Vec3 raw_position(std::uint64_t tick) const;

  std::uint64_t total_ticks() const;
  const std::vector<ScriptSegment>& segments() const { return segments_; }
  const std::vector<ButtonEvent>& buttons() const { return buttons_; }
  const Pose& start() const { return start_; }
  int haptic_hz() const { return haptic_hz_; }

  /// Throws std::invalid_argument if any sampled position leaves the workspace box.
  void validate() const;

 private:
  Pose pose_at(std::uint64_t tick) const;
  Pose evaluate(const ScriptSegment& s, const Pose& from, std::uint64_t k, std::uint64_t n) const;
  bool button_at(std::uint64_t tick) const;

  Pose start_;
  std::vector<ScriptSegment> segments_;
  std::vector<ButtonEvent> buttons_;
  std::vector<Pose> segment_starts_;
  std::vector<std::uint64_t> segment_first_tick_;
  int haptic_hz_ = 1000;
  mapping::DeviceSpec spec_;
};

}  // namespace hapticsim::protocol
