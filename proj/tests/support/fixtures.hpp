#pragma once
// Small scenes shared by the runtime, protocol and acceptance tests.

#include "hapticsim/runtime.hpp"
#include "hapticsim/session.hpp"
#include "hapticsim/stylus_script.hpp"

#include <cmath>
#include <cstdint>

namespace fixture {

using namespace hapticsim;

/// 10 cm cube at the origin and a wall whose near face sits at x = 0.12.
inline geometry::Scene cube_and_wall() {
  geometry::Scene s;
  s.add({"cube", {geometry::ConvexShape::box(Vec3::Constant(0.05))}, Pose{}, geometry::EntityKind::Solid});
  s.add({"wall", {geometry::ConvexShape::box(Vec3(0.01, 0.3, 0.3))}, Pose::translation({0.13, 0, 0}),
         geometry::EntityKind::Solid});
  s.add_check_group({{"cube"}, {"wall"}});
  return s;
}

inline runtime::SessionConfig cube_session(forcefield::ForceClass c = forcefield::ForceClass::PenetrationProportional,
                                           double stiffness = 200.0) {
  runtime::SessionConfig cfg;
  cfg.scene = cube_and_wall();
  cfg.driver = runtime::SolidDriver{"cube", entities::PivotMode::geometric_center()};
  cfg.mapping.frame = mapping::FrameMode::world();
  cfg.mapping.scale = mapping::ScaleKind::Medium;
  cfg.force.force_class = c;
  cfg.force.params.stiffness = stiffness;
  cfg.force.params.margin = 0.005;
  return cfg;
}

/// Button held; x goes linearly from x0 to x1 over `ticks`, then holds.
inline runtime::StylusSource line_x(double x0, double x1, std::uint64_t ticks, bool button = true) {
  return [=](std::uint64_t k) {
    mapping::StylusState s;
    const double a = std::min(1.0, static_cast<double>(k) / static_cast<double>(ticks));
    s.pose.position = mapping::quantize(Vec3(x0 + (x1 - x0) * a, 0, 0)).position;
    s.button = button;
    s.tick = k;
    return s;
  };
}

/// Scripted push of the cube into the wall: 0 -> 0.07 m in 1 s, then 0.07 -> 0.08 m and hold.
inline protocol::StylusScript push_script() {
  protocol::ScriptSegment a;
  a.kind = protocol::SegmentKind::Line;
  a.duration = 1.0;
  a.target = {0.07, 0, 0};
  protocol::ScriptSegment b = a;
  b.duration = 0.5;
  b.target = {0.078, 0, 0};
  protocol::ScriptSegment hold;
  hold.kind = protocol::SegmentKind::Hold;
  hold.duration = 1.0;
  return protocol::StylusScript(Pose{}, {a, b, hold}, {{0, true}});
}

}  // namespace fixture
