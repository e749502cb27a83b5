#include "doctest.h"

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include "hapticsim/recorder.hpp"
#include "hapticsim/runtime.hpp"
#include "hapticsim/session.hpp"

#include <chrono>
#include <thread>

using namespace hapticsim;
using namespace hapticsim::runtime;
using forcefield::ForceClass;

namespace {

std::vector<TimedPose> line_stream(const Vec3& from, const Vec3& to, int samples, double duration) {
  std::vector<TimedPose> s;
  for (int i = 0; i <= samples; ++i) {
    const double a = static_cast<double>(i) / samples;
    s.push_back({duration * a, Pose::translation(from + (to - from) * a)});
  }
  return s;
}

}  // namespace

TEST_SUITE("runtime") {
  TEST_CASE("rate arithmetic") {
    for (std::uint64_t n : {1000u, 999u, 1001u, 10000u, 12345u}) {
      for (int rate : {1000, 250, 100, 30, 10, 7, 1}) {
        std::uint64_t count = 0;
        for (std::uint64_t k = 0; k < n; ++k) count += fires(k, rate, 1000);
        CHECK(count == (n * rate - 1) / 1000 + 1);
      }
    }
    CHECK(ticks_for(1.0, 1000) == 1000);
    CHECK(ticks_for(0.25, 1000) == 250);
    RateConfig bad;
    bad.proximity_hz = 2000;
    CHECK_THROWS(bad.validate());
    bad = {};
    bad.publish_hz = 0;
    CHECK_THROWS(bad.validate());
    CHECK(parse_clock("simulated") == ClockKind::Simulated);
    CHECK(parse_clock("wallclock") == ClockKind::WallClock);
    CHECK_FALSE(parse_clock("sundial"));
  }

  TEST_CASE("simulated run tick counts") {
    ManipulationSession session(fixture::cube_session());
    RunOptions o;
    o.duration = 1.0;
    const auto r = run(session, fixture::line_x(0, 0.02, 1000), o);
    CHECK(r.report.haptic_ticks == 1000);
    CHECK(r.report.proximity_ticks == 100);
    CHECK(r.report.snapshots == 10);
  }

  TEST_CASE("stalled observer costs no ticks") {
    ManipulationSession session(fixture::cube_session());
    RunOptions o;
    o.duration = 10.0;
    std::atomic<int> seen{0};
    o.observer = [&](const SceneSnapshot&) {
      if (seen++ == 0) std::this_thread::sleep_for(std::chrono::seconds(1));
    };
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run(session, fixture::line_x(0, 0.05, 10000), o);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(r.report.haptic_ticks == 10000);
    CHECK(r.report.proximity_ticks == 1000);
    CHECK(r.report.snapshots == 100);
    CHECK(r.report.snapshots_delivered < r.report.snapshots);  // the stall dropped stale snapshots
    CHECK(wall < 5.0);
  }

  TEST_CASE("wall-clock mode reports jitter") {
    ManipulationSession session(fixture::cube_session());
    RunOptions o;
    o.duration = 0.2;
    o.rates.clock = ClockKind::WallClock;
    const auto r = run(session, fixture::line_x(0, 0.01, 200), o);
    CHECK(r.report.haptic_ticks == 200);
    REQUIRE(r.report.jitter);
    CHECK(r.report.jitter->samples == 200);
    CHECK(r.report.wall_seconds >= 0.19);
  }

  TEST_CASE("interpolate_force") {
    forcefield::ForceParams p;
    p.margin = 0.005;
    p.stiffness = 200;
    geometry::ProximityResult last;
    last.point_b = {0, 0, 0};
    last.point_a = {0.002, 0, 0};
    last.distance = 0.002;
    const Pose at(Vec3(1, 2, 3), Quat::Identity());

    const auto same = interpolate_force(last, at, at, p, ForceClass::PenetrationProportional);
    const auto direct = forcefield::render_force(last, p, ForceClass::PenetrationProportional, Vec3::Zero());
    CHECK(same.force == direct.force);

    // Retreat 1 mm along +n: effective distance 3 mm.
    const auto away = interpolate_force(last, at, Pose::translation(at.position + Vec3(0.001, 0, 0)), p,
                                        ForceClass::PenetrationProportional);
    CHECK(away.force.x() == doctest::Approx(200 * 0.002).epsilon(1e-9));
    CHECK(away.force.norm() < direct.force.norm());

    const auto tangential = interpolate_force(last, at, Pose::translation(at.position + Vec3(0, 0.004, -0.002)), p,
                                              ForceClass::PenetrationProportional);
    CHECK((tangential.force - direct.force).norm() < 1e-15);

    CHECK(interpolate_force(std::nullopt, at, at, p, ForceClass::PenetrationProportional).force == Vec3::Zero());

    // Lipschitz in displacement with constant stiffness.
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-0.004, 0.004);
    for (int i = 0; i < 1000; ++i) {
      const Pose a = Pose::translation(at.position + Vec3(u(rng), u(rng), u(rng)));
      const Pose b = Pose::translation(at.position + Vec3(u(rng), u(rng), u(rng)));
      const auto fa = interpolate_force(last, at, a, p, ForceClass::PenetrationProportional);
      const auto fb = interpolate_force(last, at, b, p, ForceClass::PenetrationProportional);
      CHECK(std::abs(fa.force.norm() - fb.force.norm()) <= p.stiffness * (a.position - b.position).norm() * (1 + 1e-12));
    }
  }

  TEST_CASE("commits never collide") {
    for (auto c : {ForceClass::ConstantContact, ForceClass::PenetrationProportional, ForceClass::SpringDamper}) {
      ManipulationSession session(fixture::cube_session(c));
      const auto script = fixture::push_script();
      RunOptions o;
      o.duration = 2.5;
      const auto r = run(session, [&](std::uint64_t k) { return script.sample(k); }, o);
      CHECK(r.report.rejections > 0);
      CHECK(r.report.force_max > 0.0);
      CHECK(r.report.force_max <= 6.4);
      REQUIRE(r.report.min_distance);
      CHECK(*r.report.min_distance > 0.0);
      auto scene = session.scene().entities();
      for (const auto& commit : r.commits) {
        REQUIRE(commit.distance);
        CHECK(*commit.distance > 0.0);
        for (auto& e : scene)
          if (e.id == "cube") e.pose = commit.poses.front().second;
        CHECK(oracle::group_distance(scene, session.scene().check_groups().front()) > 0.0);
      }
    }
  }

  TEST_CASE("session clutch: no jump at engage, no motion when disengaged") {
    ManipulationSession s(fixture::cube_session());
    const Pose before = s.scene().entity("cube").pose;
    mapping::StylusState st;
    st.pose.position = {0.03, -0.01, 0.02};
    st.button = false;
    st.tick = 0;
    s.update_stylus(st);
    s.proximity_step();
    CHECK(s.scene().entity("cube").pose == before);

    st.button = true;
    st.tick = 1;
    s.update_stylus(st);
    REQUIRE(s.mapped_handle());
    CHECK(*s.mapped_handle() == s.committed_handle());
    s.proximity_step();
    CHECK(s.scene().entity("cube").pose == before);

    st.pose.position.y() += 0.01;
    st.tick = 2;
    s.update_stylus(st);
    s.proximity_step();
    CHECK(s.scene().entity("cube").pose.position.isApprox(before.position + Vec3(0, 0.01, 0), 1e-12));

    const Pose held = s.scene().entity("cube").pose;
    st.button = false;
    for (int k = 3; k < 50; ++k) {
      st.tick = static_cast<std::uint64_t>(k);
      st.pose.position.z() -= 0.001;
      s.update_stylus(st);
      s.proximity_step();
      CHECK(s.scene().entity("cube").pose == held);
    }
  }

  TEST_CASE("mode changes re-anchor without a jump") {
    ManipulationSession s(fixture::cube_session());
    mapping::StylusState st;
    st.button = true;
    s.update_stylus(st);
    st.pose.position = {0.01, 0, 0};
    st.tick = 1;
    s.update_stylus(st);
    s.proximity_step();
    const Pose p = s.scene().entity("cube").pose;
    s.set_scale(mapping::ScaleKind::Rough);
    s.set_frame(mapping::FrameMode::screen());
    s.set_camera(Pose::translation({0, 0, 3}), 3.2);
    s.set_pivot(entities::PivotMode::self_origin());
    st.tick = 2;
    s.update_stylus(st);
    s.proximity_step();
    CHECK(s.scene().entity("cube").pose == p);
    st.pose.position.x() += 0.001;  // device X is the screen normal, camera looks down -Z
    st.tick = 3;
    s.update_stylus(st);
    s.proximity_step();
    CHECK(s.scene().entity("cube").pose.position.isApprox(p.position + Vec3(0, 0, -0.01), 1e-12));
  }

  TEST_CASE("force disabled is silent") {
    auto cfg = fixture::cube_session();
    cfg.force.enabled = false;
    ManipulationSession s(cfg);
    const auto script = fixture::push_script();
    RunOptions o;
    o.duration = 2.0;
    const auto r = run(s, [&](std::uint64_t k) { return script.sample(k); }, o);
    CHECK(r.report.force_max == 0.0);
    CHECK(r.report.rejections > 0);
  }

  TEST_CASE("recorder sampling rules") {
    const auto line = line_stream({0, 0, 0}, {1, 0, 0}, 1000, 1.0);
    const auto d = record(RecordMode::auto_distance(0.1), "cube", line);
    CHECK(d.frames.size() == 11);
    for (std::size_t i = 0; i < d.frames.size(); ++i) {
      const auto& f = d.frames[i];
      CHECK(f.entity_id == "cube");
      CHECK(f.pose.position.y() == 0.0);
      CHECK(f.pose.position.z() == 0.0);
      CHECK(std::any_of(line.begin(), line.end(), [&](const TimedPose& s) { return s.pose == f.pose && s.t == f.t; }));
      if (i > 0) {
        CHECK(f.t > d.frames[i - 1].t);
        const double gap = f.pose.position.x() - d.frames[i - 1].pose.position.x();
        CHECK(gap >= 0.1 * (1 - 1e-9));
        if (i + 1 < d.frames.size()) CHECK(gap <= 0.1 + 0.001 + 1e-12);
      }
    }

    const auto timed = record(RecordMode::auto_time(0.1), "cube", line_stream({0, 0, 0}, {0.3, 0, 0}, 100, 1.0));
    REQUIRE(timed.frames.size() == 11);
    for (std::size_t i = 0; i < 11; ++i) CHECK(timed.frames[i].t == doctest::Approx(0.1 * static_cast<double>(i)));

    std::vector<TimedPose> still;
    for (int i = 0; i <= 100; ++i) still.push_back({i * 0.01, Pose::translation({0.2, 0.1, 0})});
    CHECK(record(RecordMode::auto_distance(0.05), "cube", still).frames.size() == 2);

    const std::vector<std::size_t> caps{10, 40, 41};
    CHECK(record(RecordMode::manual(), "cube", line, caps).frames.size() == 5);

    TrajectoryRecorder rec;
    rec.arm(RecordMode::auto_time(0.1), 0.0, Pose{}, "x");
    CHECK_THROWS_AS(rec.set_mode(RecordMode::manual()), std::logic_error);
    CHECK_THROWS_AS(rec.arm(RecordMode::manual(), 0.0, Pose{}, "x"), std::logic_error);
    rec.disarm(1.0, Pose{});
    CHECK_THROWS_AS(rec.capture(2.0, Pose{}), std::logic_error);
    CHECK_THROWS(RecordMode::auto_distance(0).validate());
  }

  TEST_CASE("run-time recording stores committed poses verbatim") {
    auto cfg = fixture::cube_session();
    cfg.scene = geometry::Scene{};
    cfg.scene.add({"cube", {geometry::ConvexShape::box(Vec3::Constant(0.05))}, Pose{}, geometry::EntityKind::Solid});
    cfg.mapping.scale = mapping::ScaleKind::Rough;
    ManipulationSession s(cfg);
    RunOptions o;
    o.duration = 1.0;
    o.record = RecordMode::auto_distance(0.1);
    const auto r = run(s, fixture::line_x(-0.05, 0.05, 1000), o);
    REQUIRE(r.trajectory);
    CHECK(r.trajectory->frames.size() == 11);
    for (const auto& f : r.trajectory->frames) {
      const bool committed = f.pose == Pose{} || std::any_of(r.commits.begin(), r.commits.end(), [&](const CommitRecord& c) {
                               return c.poses.front().second == f.pose;
                             });
      CHECK(committed);
      CHECK(f.pose.position.y() == 0.0);
      CHECK(f.pose.position.z() == 0.0);
    }
  }
}
