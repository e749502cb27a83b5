#include "doctest.h"

#include "support/oracles.hpp"
#include "support/paths.hpp"

#include "hapticsim/io.hpp"
#include "hapticsim/mannequin.hpp"
#include "hapticsim/robot.hpp"
#include "hapticsim/solid.hpp"

#include <cmath>
#include <numbers>

using namespace hapticsim;
using namespace hapticsim::entities;
using std::numbers::pi;

namespace {

RobotModel planar2r() { return io::load_robot(test_data("robots/planar2r.json")); }

JointConfig q2(double a, double b) {
  JointConfig q(2);
  q << a, b;
  return q;
}

}  // namespace

TEST_SUITE("entities") {
  TEST_CASE("solid pivots") {
    geometry::SceneEntity cube{"cube", {geometry::ConvexShape::box(Vec3::Constant(0.5), Vec3(0, 0, 0.5))}, Pose{}, {}};
    CHECK(geometric_center(cube).isApprox(Vec3(0, 0, 0.5), 1e-15));
    geometry::SceneEntity pt{"p", {geometry::ConvexShape({Vec3(1, 2, 3)})}, Pose{}, {}};
    CHECK(geometric_center(pt) == Vec3(1, 2, 3));
    geometry::SceneEntity two{"t",
                              {geometry::ConvexShape::box(Vec3::Constant(0.5)),
                               geometry::ConvexShape::box(Vec3::Constant(0.5), Vec3(2, 0, 0))},
                              Pose{},
                              {}};
    CHECK(geometric_center(two).isApprox(Vec3(1, 0, 0), 1e-15));

    const Pose trans = Pose::translation({0.1, 0.2, 0.3});
    const Pose moved = move_solid(cube, PivotMode::geometric_center(), trans);
    CHECK(moved.position.isApprox(Vec3(0.1, 0.2, 0.3)));
    CHECK(moved.orientation.coeffs() == Quat::Identity().coeffs());

    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
      cube.pose = Pose(Vec3(0.3, -1, 2), oracle::random_quat(rng));
      const Pose rot(Vec3::Zero(), oracle::random_quat(rng));
      for (const auto& pivot : {PivotMode::self_origin(), PivotMode::geometric_center(),
                                PivotMode::user(Pose(Vec3(0.2, 0.1, -0.3), oracle::random_quat(rng)))}) {
        const Vec3 before = pivot_frame(cube, pivot).position;
        geometry::SceneEntity after = cube;
        after.pose = move_solid(cube, pivot, rot);
        CHECK((pivot_frame(after, pivot).position - before).norm() <= 1e-12);
      }
    }
  }

  TEST_CASE("half turn about the geometric center reflects vertices") {
    std::mt19937_64 rng(8);
    geometry::SceneEntity e{"cloud", {geometry::ConvexShape(oracle::random_cloud(rng, 9, 0.5))}, Pose{}, {}};
    const Vec3 c = geometric_center(e);
    const Pose half(Vec3::Zero(), Quat(Eigen::AngleAxisd(pi, Vec3::UnitZ())));
    const Pose p = move_solid(e, PivotMode::geometric_center(), half);
    for (const auto& v : e.shapes[0].vertices()) {
      const Vec3 w = p.transform(v);
      const Vec3 reflected(2 * c.x() - v.x(), 2 * c.y() - v.y(), v.z());
      CHECK((w - reflected).norm() < 1e-12);
    }
  }

  TEST_CASE("forward kinematics") {
    const RobotModel m = planar2r();
    CHECK(forward_kinematics(m, q2(0, pi / 2)).position.isApprox(Vec3(1, 1, 0), 1e-12));
    CHECK_THROWS_AS(forward_kinematics(m, q2(0, 4.0)), JointLimitError);

    for (const char* file : {"robots/planar2r.json", "robots/planar3r.json", "robots/generic6r.json"}) {
      const RobotModel r = io::load_robot(test_data(file));
      std::mt19937_64 rng(12);
      for (int i = 0; i < 300; ++i) {
        JointConfig q(static_cast<Eigen::Index>(r.dof()));
        for (std::size_t k = 0; k < r.dof(); ++k) {
          const auto& j = r.chain.joints[k];
          q[static_cast<Eigen::Index>(k)] = std::uniform_real_distribution<double>(j.lo, j.hi)(rng);
        }
        const Pose p = forward_kinematics(r, q);
        const Eigen::Matrix4d ref = oracle::fk_matrix_chain(r, q);
        CHECK((p.position - ref.topRightCorner<3, 1>()).norm() <= 1e-12);
        CHECK((p.orientation.toRotationMatrix() - ref.topLeftCorner<3, 3>()).norm() <= 1e-12);
      }
    }
  }

  TEST_CASE("planar 2R branch selection") {
    const RobotModel m = planar2r();
    const Pose target = forward_kinematics(m, q2(0, pi / 2));
    const JointConfig q = inverse_kinematics(m, target, q2(0.1, 1.4));
    CHECK(q[0] == doctest::Approx(0).epsilon(1e-9));
    CHECK(q[1] == doctest::Approx(pi / 2).epsilon(1e-9));
    const JointConfig other = inverse_kinematics(m, target, q2(1.5, -1.5));
    CHECK(other[0] == doctest::Approx(pi / 2));
    CHECK(other[1] == doctest::Approx(-pi / 2));

    IkOptions forced;
    forced.forced_branch = 1;
    const JointConfig f = inverse_kinematics(m, target, q2(0.1, 1.4), forced);
    CHECK(f[1] < 0);

    // Zero-motion fixed point.
    const JointConfig prev = q2(0.4, -0.9);
    CHECK(oracle::max_norm(inverse_kinematics(m, forward_kinematics(m, prev), prev), prev) <= 1e-9);

    Pose far = target;
    far.position = {3, 0, 0};
    CHECK_THROWS_AS(inverse_kinematics(m, far, prev), IkError);
  }

  TEST_CASE("planar 2R matches exhaustive branch enumeration") {
    const RobotModel m = planar2r();
    const auto& j = m.chain.joints;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> a(j[0].lo, j[0].hi), b(j[1].lo, j[1].hi);
    for (int i = 0; i < 1000; ++i) {
      const JointConfig truth = q2(a(rng), b(rng));
      const JointConfig prev = q2(a(rng), b(rng));
      const Pose target = forward_kinematics(m, truth);
      const Vec3 local = m.base_pose.inverse().transform(target.position);
      const auto sols = oracle::planar2r_solutions(1.0, 1.0, local.x(), local.y(), j[0].lo, j[0].hi, j[1].lo, j[1].hi);
      REQUIRE_FALSE(sols.empty());
      Eigen::Vector2d best = sols.front();
      for (const auto& s : sols)
        if (oracle::max_norm(s, prev) < oracle::max_norm(best, prev)) best = s;
      const JointConfig got = inverse_kinematics(m, target, prev);
      CAPTURE(i);
      CHECK(oracle::max_norm(got, best) <= 1e-9);
      CHECK((forward_kinematics(m, got).position - target.position).norm() <= 1e-6);
    }
  }

  TEST_CASE("1 mm Cartesian sweep never flips branch") {
    const RobotModel m = planar2r();
    JointConfig q = inverse_kinematics(m, Pose::translation({1.4, 0.2, 0}), q2(0.2, 1.1));
    // A closed circle inside the reachable annulus, then a radial pass in and out.
    std::vector<Vec3> path;
    const Vec3 c(1.0, 0.2, 0);
    const double r = 0.4;
    for (double t = 0; t < 2 * pi; t += 0.001 / r) path.push_back(c + r * Vec3(std::cos(t), std::sin(t), 0));
    for (double d = 1.4; d > 0.3; d -= 0.001) path.push_back(Vec3(d, 0.2 * d / 1.4, 0));
    for (double d = 0.3; d < 1.95; d += 0.001) path.push_back(Vec3(d, 0.2 * d / 1.4, 0));
    const bool elbow_up = q[1] > 0;
    double worst = 0;
    for (const Vec3& p : path) {
      const JointConfig next = inverse_kinematics(m, Pose::translation(p), q);
      worst = std::max(worst, oracle::max_norm(next, q));
      CHECK((next[1] > 0) == elbow_up);
      q = next;
    }
    CHECK(path.size() > 5000);
    CHECK(worst < 0.05);
  }

  TEST_CASE("planar 3R analytic solutions") {
    const RobotModel m = io::load_robot(test_data("robots/planar3r.json"));
    std::mt19937_64 rng(17);
    int ok = 0;
    for (int i = 0; i < 300; ++i) {
      JointConfig truth(3), prev(3);
      for (int k = 0; k < 3; ++k) {
        std::uniform_real_distribution<double> u(m.chain.joints[k].lo, m.chain.joints[k].hi);
        truth[k] = u(rng);
        prev[k] = u(rng);
      }
      const Pose target = forward_kinematics(m, truth);
      const auto branches = analytic_branches(m, target);
      CHECK(branches.size() >= 1);
      const JointConfig got = inverse_kinematics(m, target, prev);
      CHECK((forward_kinematics(m, got).position - target.position).norm() <= 1e-6);
      ++ok;
    }
    CHECK(ok == 300);
  }

  TEST_CASE("generic chain DLS round trip") {
    const RobotModel m = io::load_robot(test_data("robots/generic6r.json"));
    std::mt19937_64 rng(19);
    int reached = 0;
    for (int i = 0; i < 50; ++i) {
      JointConfig truth(6);
      for (int k = 0; k < 6; ++k) truth[k] = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
      JointConfig prev = truth;
      for (int k = 0; k < 6; ++k) prev[k] += std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
      const Pose target = forward_kinematics(m, truth);
      try {
        const JointConfig got = inverse_kinematics(m, target, prev);
        CHECK((forward_kinematics(m, got).position - target.position).norm() <= 1e-4);
        ++reached;
      } catch (const IkError&) {
      }
    }
    CHECK(reached >= 45);
  }

  TEST_CASE("joint limits act as an obstacle") {
    const RobotModel m = planar2r();
    const double zone = 0.1;
    const auto mid = joint_limit_force(m, q2(0, 0), zone);
    CHECK(mid == std::vector<double>{0.0, 0.0});
    const double hi = m.chain.joints[0].hi;
    const auto near_hi = joint_limit_force(m, q2(hi - zone / 2, 0), zone);
    CHECK(near_hi[0] == doctest::Approx(-zone / 2));
    const auto at_lo = joint_limit_force(m, q2(m.chain.joints[0].lo, 0), zone);
    CHECK(at_lo[0] == doctest::Approx(zone));
    CHECK(joint_limit_cartesian_force(m, q2(0, 0), zone, 10).isZero());
    CHECK_FALSE(joint_limit_cartesian_force(m, q2(hi - zone / 2, 0.5), zone, 10).isZero());
  }

  TEST_CASE("robot drive modes") {
    RobotModel m = planar2r();
    m.attach_mode = AttachMode::Base;
    const Pose moved = Pose::translation({0.5, 0, 0}) * m.base_pose;
    const auto base = drive_robot(m, moved, q2(0.1, 0.2));
    REQUIRE(std::holds_alternative<Pose>(base));
    CHECK(std::get<Pose>(base) == moved);
    m.attach_mode = AttachMode::Tcpf;
    const Pose target = forward_kinematics(m, q2(0.3, 0.7));
    const auto tcp = drive_robot(m, target, q2(0.25, 0.75));
    REQUIRE(std::holds_alternative<JointConfig>(tcp));
    CHECK((forward_kinematics(m, std::get<JointConfig>(tcp)).position - target.position).norm() <= 1e-6);
  }

  TEST_CASE("sample mannequin") {
    const MannequinModel m = io::load_mannequin(test_data("mannequins/mannequin56.json"));
    CHECK(m.dof() == 56);
    CHECK(m.declared_dof == 56);
    const MannequinState s0 = neutral_state(m, Pose::translation({0, 0, 1}));

    // Whole-body translation moves every segment equally and leaves joints alone.
    const Pose moved = Pose::translation({0.3, -0.2, 1.1});
    const auto wb = drive_mannequin(m, MannequinTarget::WholeBody, moved, std::nullopt, s0);
    CHECK(wb.state.q == s0.q);
    const auto before = segment_poses(m, s0), after = segment_poses(m, wb.state);
    for (const auto& [name, p] : before) CHECK((after.at(name).position - p.position - Vec3(0.3, -0.2, 0.1)).norm() < 1e-12);

    // Trunk lock leaves trunk joints bit-identical.
    MannequinModel locked = m;
    locked.trunk_locked = true;
    Pose target = hand_pose(m, s0, Hand::Right);
    target.position += Vec3(0.1, 0.1, 0.1);
    const auto r = drive_mannequin(locked, MannequinTarget::Right, target, std::nullopt, s0);
    for (int j : m.trunk_joints) CHECK(r.state.q[j] == s0.q[j]);

    CHECK_THROWS(drive_mannequin(m, MannequinTarget::Both, target, std::nullopt, s0));
  }

  TEST_CASE("DLS on the 56-DOF mannequin reaches sampled targets") {
    const MannequinModel m = io::load_mannequin(test_data("mannequins/mannequin56.json"));
    const MannequinState s0 = neutral_state(m, Pose::translation({0, 0, 1}));
    const auto arm = m.tree.chain_to(m.right_hand.joint);
    std::mt19937_64 rng(41);
    int reached = 0;
    for (int i = 0; i < 100; ++i) {
      MannequinState truth = s0;
      for (int j : arm) {
        if (std::find(m.trunk_joints.begin(), m.trunk_joints.end(), j) != m.trunk_joints.end()) continue;
        const auto& jt = m.tree.joints[static_cast<std::size_t>(j)];
        truth.q[j] = std::uniform_real_distribution<double>(jt.lo, jt.hi)(rng);
      }
      const Pose target = hand_pose(m, truth, Hand::Right);
      const auto r = drive_mannequin(m, MannequinTarget::Right, target, std::nullopt, s0);
      CHECK(r.iterations <= 200);
      if ((hand_pose(m, r.state, Hand::Right).position - target.position).norm() <= 0.005) ++reached;
    }
    CHECK(reached >= 95);
  }
}
