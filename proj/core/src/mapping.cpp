#include "hapticsim/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hapticsim::mapping {

void DeviceSpec::validate() const {
  if (!(workspace_extents.array() > 0.0).all()) throw std::invalid_argument("workspace extents must be > 0");
  if (!(position_resolution > 0.0)) throw std::invalid_argument("position resolution must be > 0");
  if (!(peak_force > 0.0) || !(continuous_force > 0.0) || peak_force < continuous_force) {
    throw std::invalid_argument("device forces must satisfy peak >= continuous > 0");
  }
  if (haptic_rate <= 0 || sensed_dof <= 0 || force_dof <= 0) throw std::invalid_argument("device rates and DOF must be > 0");
  if (force_dof > sensed_dof) throw std::invalid_argument("force DOF cannot exceed sensed DOF");
}

bool DeviceSpec::contains(const Vec3& p) const {
  // Quantized coordinates are whole multiples of the resolution; allow their rounding.
  const Eigen::Array3d limit = half_extents().array() + 1e-12;
  return (p.cwiseAbs().array() <= limit).all();
}

void ScaleLevels::validate() const {
  for (double s : {rough, medium, fine}) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("scale levels must be > 0");
  }
}

double active_scale(const WorkspaceMapping& mapping, double viewport_extent, const DeviceSpec& spec) {
  switch (mapping.scale_kind) {
    case ScaleKind::Rough: return mapping.levels.rough;
    case ScaleKind::Medium: return mapping.levels.medium;
    case ScaleKind::Fine: return mapping.levels.fine;
    case ScaleKind::ScreenAdaptive:
      if (!(viewport_extent > 0.0) || !std::isfinite(viewport_extent)) {
        throw std::invalid_argument("viewport extent must be > 0");
      }
      return viewport_extent / spec.max_extent();
  }
  throw std::invalid_argument("unknown scale mode");
}

Mat3 frame_rotation(const FrameMode& mode, const Pose& camera_frame) {
  switch (mode.kind) {
    case FrameKind::World: return Mat3::Identity();
    case FrameKind::UserDefined:
      require_valid(mode.frame, "user-defined mapping frame");
      return mode.frame.orientation.toRotationMatrix();
    case FrameKind::Screen: {
      require_valid(camera_frame, "camera frame");
      Mat3 r;
      r.col(0) = camera_frame.rotate(-Vec3::UnitZ());
      r.col(1) = camera_frame.rotate(Vec3::UnitY());
      r.col(2) = camera_frame.rotate(Vec3::UnitX());
      return r;
    }
  }
  throw std::invalid_argument("unknown frame mode");
}

MappedPose map_stylus(const StylusState& state, const WorkspaceMapping& mapping, const Pose& camera_frame,
                      double viewport_extent, const DeviceSpec& spec) {
  if (!mapping.engaged) return {mapping.anchor_scene, false};
  if (!(viewport_extent > 0.0) || !std::isfinite(viewport_extent)) {
    throw std::invalid_argument("viewport extent must be > 0");
  }
  require_valid(state.pose, "stylus pose");

  const Mat3 r = frame_rotation(mapping.frame_mode, camera_frame);
  const double s = active_scale(mapping, viewport_extent, spec);

  Pose out = mapping.anchor_scene;
  const Vec3 d = state.pose.position - mapping.anchor_device;
  if (!d.isZero(0.0)) out.position = mapping.anchor_scene.position + r * (s * d);

  if (state.pose.orientation.coeffs() != mapping.anchor_device_orientation.coeffs()) {
    const Quat rel = state.pose.orientation * mapping.anchor_device_orientation.conjugate();
    const Quat rq(r);
    const Quat rel_scene = rq * rel * rq.conjugate();
    out.orientation = (rel_scene * mapping.anchor_scene.orientation).normalized();
  }
  return {out, true};
}

WorkspaceMapping engage(WorkspaceMapping mapping, const StylusState& state, const Pose& current_scene_pose) {
  require_valid(current_scene_pose, "engage scene pose");
  mapping.engaged = true;
  mapping.anchor_device = state.pose.position;
  mapping.anchor_device_orientation = state.pose.orientation;
  mapping.anchor_scene = current_scene_pose;
  return mapping;
}

WorkspaceMapping disengage(WorkspaceMapping mapping) {
  mapping.engaged = false;
  return mapping;
}

Quantized quantize(const Vec3& position, const DeviceSpec& spec) {
  require_finite(position, "stylus position");
  const Vec3 half = spec.half_extents();
  Quantized q;
  q.position = position;
  for (int i = 0; i < 3; ++i) {
    if (q.position[i] > half[i]) {
      q.position[i] = half[i];
      q.clamped = true;
    } else if (q.position[i] < -half[i]) {
      q.position[i] = -half[i];
      q.clamped = true;
    }
    const double res = spec.position_resolution;
    // The box edge need not be a whole number of steps; never round out of it.
    const double max_steps = std::floor(half[i] / res + 1e-6);
    const double steps = std::clamp(std::round(q.position[i] / res), -max_steps, max_steps);
    q.position[i] = steps * res;
  }
  return q;
}

std::string_view to_string(ScaleKind kind) {
  switch (kind) {
    case ScaleKind::Rough: return "rough";
    case ScaleKind::Medium: return "medium";
    case ScaleKind::Fine: return "fine";
    case ScaleKind::ScreenAdaptive: return "screen";
  }
  return "?";
}

std::string_view to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::Screen: return "screen";
    case FrameKind::World: return "world";
    case FrameKind::UserDefined: return "user";
  }
  return "?";
}

std::optional<ScaleKind> parse_scale_kind(std::string_view s) {
  if (s == "rough") return ScaleKind::Rough;
  if (s == "medium") return ScaleKind::Medium;
  if (s == "fine") return ScaleKind::Fine;
  if (s == "screen" || s == "screen_adaptive") return ScaleKind::ScreenAdaptive;
  return std::nullopt;
}

std::optional<FrameKind> parse_frame_kind(std::string_view s) {
  if (s == "screen") return FrameKind::Screen;
  if (s == "world") return FrameKind::World;
  if (s == "user" || s == "user_defined") return FrameKind::UserDefined;
  return std::nullopt;
}

}  // namespace hapticsim::mapping
