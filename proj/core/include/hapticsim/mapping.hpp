#pragma once

#include "hapticsim/pose.hpp"

#include <cstdint>
#include <optional>
#include <string_view>

namespace hapticsim::mapping {

/// Desktop stylus device: 16 x 13 x 13 cm workspace, 0.02 mm position resolution,
/// 6.4 N peak / 1.4 N continuous force, 1 kHz servo rate, 6 sensed and 3 actuated DOF.
struct DeviceSpec {
  Vec3 workspace_extents{0.16, 0.13, 0.13};
  double position_resolution = 0.00002;
  double peak_force = 6.4;
  double continuous_force = 1.4;
  int haptic_rate = 1000;
  int sensed_dof = 6;
  int force_dof = 3;

  void validate() const;
  Vec3 half_extents() const { return workspace_extents / 2.0; }
  double max_extent() const { return workspace_extents.maxCoeff(); }
  bool contains(const Vec3& p) const;
};

/// Device reading: pose in the device frame, button state and haptic tick.
struct StylusState {
  Pose pose;
  bool button = false;
  std::uint64_t tick = 0;
};

enum class FrameKind : std::uint8_t { Screen = 0, World = 1, UserDefined = 2 };

struct FrameMode {
  FrameKind kind = FrameKind::Screen;
  Pose frame;  // used by UserDefined only

  static FrameMode screen() { return {FrameKind::Screen, {}}; }
  static FrameMode world() { return {FrameKind::World, {}}; }
  static FrameMode user(const Pose& frame) { return {FrameKind::UserDefined, frame}; }
};

enum class ScaleKind : std::uint8_t { Rough = 0, Medium = 1, Fine = 2, ScreenAdaptive = 3 };

/// Scene meters per device meter for the three fixed levels.
struct ScaleLevels {
  double rough = 10.0;
  double medium = 1.0;
  double fine = 0.1;

  void validate() const;
};

struct WorkspaceMapping {
  FrameMode frame_mode = FrameMode::screen();
  ScaleKind scale_kind = ScaleKind::Medium;
  ScaleLevels levels;
  Vec3 anchor_device = Vec3::Zero();
  Quat anchor_device_orientation = Quat::Identity();
  Pose anchor_scene;
  bool engaged = false;
};

struct MappedPose {
  Pose pose;
  bool moved = false;  // false when the mapping is disengaged (no motion)
};

/// Active translation scale. ScreenAdaptive: viewport_extent / max workspace extent.
double active_scale(const WorkspaceMapping& mapping, double viewport_extent, const DeviceSpec& spec = {});

/// Rotation taking device axes to scene axes for the mapping's frame mode. In Screen mode
/// the camera looks along its local -Z with local +Y up; device X maps to the viewing
/// direction (screen normal), device Y to screen up and device Z to screen right.
Mat3 frame_rotation(const FrameMode& mode, const Pose& camera_frame);

/// Scene pose of the driven handle. Translations are scaled, rotations map 1:1 and are
/// re-expressed in the mode frame. A disengaged mapping returns the anchor with moved=false.
MappedPose map_stylus(const StylusState& state, const WorkspaceMapping& mapping, const Pose& camera_frame,
                      double viewport_extent, const DeviceSpec& spec = {});

/// Clutch in: re-anchor at the current device and scene poses. Engaging an engaged mapping
/// refreshes the anchors.
WorkspaceMapping engage(WorkspaceMapping mapping, const StylusState& state, const Pose& current_scene_pose);

/// Clutch out; anchors are kept but no motion is produced until the next engage.
WorkspaceMapping disengage(WorkspaceMapping mapping);

struct Quantized {
  Vec3 position;
  bool clamped = false;
};

/// Clamps to the centered workspace box, then rounds each component to the nearest
/// multiple of the position resolution.
Quantized quantize(const Vec3& position, const DeviceSpec& spec = {});

std::string_view to_string(ScaleKind kind);
std::string_view to_string(FrameKind kind);
std::optional<ScaleKind> parse_scale_kind(std::string_view s);
std::optional<FrameKind> parse_frame_kind(std::string_view s);

}  // namespace hapticsim::mapping
