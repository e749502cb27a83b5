#include "doctest.h"

#include "support/oracles.hpp"

#include "hapticsim/mapping.hpp"

#include <cmath>
#include <numbers>

using namespace hapticsim;
using namespace hapticsim::mapping;

namespace {

StylusState at(const Vec3& p, bool button = true, const Quat& q = Quat::Identity()) {
  StylusState s;
  s.pose = Pose(p, q);
  s.button = button;
  return s;
}

WorkspaceMapping engaged_world(const Pose& scene_pose, const StylusState& s, ScaleKind k = ScaleKind::Medium) {
  WorkspaceMapping m;
  m.frame_mode = FrameMode::world();
  m.scale_kind = k;
  return engage(m, s, scene_pose);
}

}  // namespace

TEST_SUITE("mapping") {
  TEST_CASE("device constants") {
    const DeviceSpec d;
    CHECK(d.workspace_extents == Vec3(0.16, 0.13, 0.13));
    CHECK(d.position_resolution == 0.00002);
    CHECK(d.peak_force == 6.4);
    CHECK(d.continuous_force == 1.4);
    CHECK(d.haptic_rate == 1000);
    CHECK(d.sensed_dof == 6);
    CHECK(d.force_dof == 3);
    CHECK_NOTHROW(d.validate());
    DeviceSpec bad;
    bad.force_dof = 7;
    CHECK_THROWS(bad.validate());
  }

  TEST_CASE("quantize") {
    CHECK(quantize({0.000013, 0, 0}).position.x() == 0.00002);
    CHECK(quantize({0.0000099, 0, 0}).position.x() == 0.0);
    const auto c = quantize({0.2, 0, 0});
    CHECK(c.clamped);
    CHECK(c.position.x() == 0.08);
    CHECK_FALSE(quantize({0.01, 0.02, -0.03}).clamped);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    const DeviceSpec d;
    for (int i = 0; i < 2000; ++i) {
      const Vec3 q = quantize({u(rng), u(rng), u(rng)}).position;
      CHECK(d.contains(q));
      for (int k = 0; k < 3; ++k) CHECK(q[k] == std::round(q[k] / d.position_resolution) * d.position_resolution);
      CHECK(quantize(q).position == q);  // idempotent
    }
  }

  TEST_CASE("world mode identity and scale levels") {
    const StylusState s0 = at({0.01, 0.02, 0.0});
    const Pose scene(Vec3(1, 2, 3), Quat::Identity());
    auto m = engaged_world(scene, s0);
    CHECK(map_stylus(at({0.02, 0.02, 0.0}), m, Pose{}, 1.6).pose.position.isApprox(Vec3(1.01, 2, 3), 1e-14));
    m.scale_kind = ScaleKind::Rough;
    CHECK(map_stylus(at({0.02, 0.02, 0.0}), m, Pose{}, 1.6).pose.position.isApprox(Vec3(1.1, 2, 3), 1e-14));
    m.scale_kind = ScaleKind::Fine;
    CHECK(map_stylus(at({0.02, 0.02, 0.0}), m, Pose{}, 1.6).pose.position.isApprox(Vec3(1.001, 2, 3), 1e-14));
  }

  TEST_CASE("screen-adaptive scale tracks the viewport") {
    WorkspaceMapping m;
    m.scale_kind = ScaleKind::ScreenAdaptive;
    CHECK(std::abs(active_scale(m, 3.2) - 20.0) <= 1e-12);
    CHECK(std::abs(active_scale(m, 0.8) - 5.0) <= 1e-12);
    CHECK_THROWS(active_scale(m, 0.0));
    m = engaged_world(Pose{}, at({0, 0, 0}), ScaleKind::ScreenAdaptive);
    CHECK(map_stylus(at({0.01, 0, 0}), m, Pose{}, 3.2).pose.position.isApprox(Vec3(0.2, 0, 0), 1e-12));
  }

  TEST_CASE("screen frame basis") {
    // Camera looking down world -X with world +Z up.
    Mat3 cam;
    cam.col(0) = Vec3(0, 1, 0);
    cam.col(1) = Vec3(0, 0, 1);
    cam.col(2) = Vec3(1, 0, 0);
    const Pose camera(Vec3(5, 0, 0), Quat(cam));
    Mat3 expected;
    expected.col(0) = -cam.col(2);  // device X: viewing direction
    expected.col(1) = cam.col(1);   // device Y: screen up
    expected.col(2) = cam.col(0);   // device Z: screen right
    CHECK(frame_rotation(FrameMode::screen(), camera).isApprox(expected, 1e-12));

    WorkspaceMapping m;
    m = engage(m, at({0, 0, 0}), Pose{});
    const auto moved = map_stylus(at({0, 0.01, 0}), m, camera, 1.6);
    CHECK(moved.pose.position.isApprox(Vec3(0, 0, 0.01), 1e-12));
  }

  TEST_CASE("user frame") {
    const Pose frame(Vec3::Zero(), Quat(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ())));
    WorkspaceMapping m;
    m.frame_mode = FrameMode::user(frame);
    m = engage(m, at({0, 0, 0}), Pose{});
    CHECK(map_stylus(at({0.01, 0, 0}), m, Pose{}, 1.6).pose.position.isApprox(Vec3(0, 0.01, 0), 1e-12));
  }

  TEST_CASE("clutch: engage never jumps") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-0.06, 0.06);
    for (int i = 0; i < 500; ++i) {
      const Pose scene(Vec3(u(rng) * 10, u(rng) * 10, u(rng) * 10), oracle::random_quat(rng));
      const StylusState s = at(quantize({u(rng), u(rng), u(rng)}).position, true, oracle::random_quat(rng));
      for (auto frame : {FrameMode::screen(), FrameMode::world()}) {
        for (auto k : {ScaleKind::Rough, ScaleKind::Medium, ScaleKind::Fine, ScaleKind::ScreenAdaptive}) {
          WorkspaceMapping m;
          m.frame_mode = frame;
          m.scale_kind = k;
          m = engage(m, s, scene);
          CHECK(map_stylus(s, m, Pose(Vec3(1, 2, 3), oracle::random_quat(rng)), 2.0).pose == scene);
        }
      }
    }
  }

  TEST_CASE("disengaged mapping produces no motion; ratcheting accumulates") {
    WorkspaceMapping m = engaged_world(Pose{}, at({-0.05, 0, 0}));
    Pose entity = map_stylus(at({0.05, 0, 0}), m, Pose{}, 1.6).pose;
    CHECK(entity.position.x() == doctest::Approx(0.1));
    m = disengage(m);
    const auto idle = map_stylus(at({-0.05, 0, 0}, false), m, Pose{}, 1.6);
    CHECK_FALSE(idle.moved);
    double prev = entity.position.x();
    for (int stroke = 0; stroke < 4; ++stroke) {
      m = engage(m, at({-0.05, 0, 0}), entity);
      entity = map_stylus(at({0.05, 0, 0}), m, Pose{}, 1.6).pose;
      CHECK(entity.position.x() > prev);
      prev = entity.position.x();
      m = disengage(m);
    }
    CHECK(entity.position.x() == doctest::Approx(0.5));
  }

  TEST_CASE("scale linearity and rotation passthrough") {
    const auto m = engaged_world(Pose{}, at({0, 0, 0}), ScaleKind::Rough);
    const Vec3 d1 = map_stylus(at({0.01, -0.005, 0.002}), m, Pose{}, 1.6).pose.position;
    const Vec3 d2 = map_stylus(at({0.02, -0.01, 0.004}), m, Pose{}, 1.6).pose.position;
    CHECK(d2.isApprox(2 * d1, 1e-12));
    const Quat r(Eigen::AngleAxisd(0.4, Vec3(1, 2, 3).normalized()));
    const auto rot = map_stylus(at({0, 0, 0}, true, r), m, Pose{}, 1.6).pose;
    CHECK(angular_distance(rot.orientation, r) < 1e-12);  // rotations are never scaled
  }

  TEST_CASE("names round-trip") {
    for (auto k : {ScaleKind::Rough, ScaleKind::Medium, ScaleKind::Fine, ScaleKind::ScreenAdaptive})
      CHECK(parse_scale_kind(to_string(k)) == k);
    for (auto k : {FrameKind::Screen, FrameKind::World, FrameKind::UserDefined}) CHECK(parse_frame_kind(to_string(k)) == k);
  }
}
