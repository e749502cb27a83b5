#pragma once

#include "hapticsim/geometry.hpp"

namespace hapticsim::entities {

enum class PivotKind { SelfOrigin, GeometricCenter, UserFrame };

/// Rotation center used when a solid is turned with the stylus.
struct PivotMode {
  PivotKind kind = PivotKind::SelfOrigin;
  Pose frame;  // UserFrame only, in the entity's local frame

  static PivotMode self_origin() { return {}; }
  static PivotMode geometric_center() { return {PivotKind::GeometricCenter, {}}; }
  static PivotMode user(const Pose& frame) { return {PivotKind::UserFrame, frame}; }
};

/// Arithmetic mean of every vertex of every shape, in the entity's local frame.
Vec3 geometric_center(const geometry::SceneEntity& entity);

/// World pose of the pivot frame: the handle the stylus drives.
Pose pivot_frame(const geometry::SceneEntity& entity, const PivotMode& pivot);

/// Applies the rotation of `delta` about the pivot's world point, then its translation.
Pose move_solid(const geometry::SceneEntity& entity, const PivotMode& pivot, const Pose& delta);

/// Relative motion taking handle pose `from` to `to` (rotation in world axes, translation of
/// the handle origin), as consumed by move_solid.
Pose handle_delta(const Pose& from, const Pose& to);

}  // namespace hapticsim::entities
