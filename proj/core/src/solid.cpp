#include "hapticsim/solid.hpp"

namespace hapticsim::entities {

Vec3 geometric_center(const geometry::SceneEntity& entity) {
  Vec3 sum = Vec3::Zero();
  std::size_t count = 0;
  for (const auto& shape : entity.shapes) {
    for (const auto& v : shape.vertices()) {
      sum += v;
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("entity '" + entity.id + "' has no vertices");
  return sum / static_cast<double>(count);
}

Pose pivot_frame(const geometry::SceneEntity& entity, const PivotMode& pivot) {
  switch (pivot.kind) {
    case PivotKind::SelfOrigin: return entity.pose;
    case PivotKind::GeometricCenter: return {entity.pose.transform(geometric_center(entity)), entity.pose.orientation};
    case PivotKind::UserFrame:
      require_valid(pivot.frame, "user pivot frame");
      return entity.pose * pivot.frame;
  }
  throw std::invalid_argument("unknown pivot mode");
}

Pose move_solid(const geometry::SceneEntity& entity, const PivotMode& pivot, const Pose& delta) {
  require_valid(delta, "solid motion delta");
  const Pose& pose = entity.pose;
  if (is_exact_identity(delta.orientation)) {
    return {pose.position + delta.position, pose.orientation};
  }
  const Vec3 center = pivot_frame(entity, pivot).position;
  return {center + delta.orientation * (pose.position - center) + delta.position,
          (delta.orientation * pose.orientation).normalized()};
}

Pose handle_delta(const Pose& from, const Pose& to) {
  Pose d;
  d.position = to.position - from.position;
  if (to.orientation.coeffs() != from.orientation.coeffs()) {
    d.orientation = (to.orientation * from.orientation.conjugate()).normalized();
  }
  return d;
}

}  // namespace hapticsim::entities
