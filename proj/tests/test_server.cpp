#include "doctest.h"

#include "support/fixtures.hpp"

#include "hapticsim/server.hpp"

using namespace hapticsim;
using namespace hapticsim::protocol;
using namespace std::chrono_literals;

namespace {

StylusScript line_script() {
  ScriptSegment line;
  line.kind = SegmentKind::Line;
  line.duration = 2.0;
  line.target = {0.04, 0.01, -0.02};
  return StylusScript(Pose{}, {line}, {{0, true}});
}

template <class T>
T expect(HapticClient& c, HapticServer& s) {
  auto m = c.receive(2000ms, [&] { s.step(); });
  REQUIRE(m);
  REQUIRE(std::holds_alternative<T>(*m));
  return std::get<T>(*m);
}

}  // namespace

TEST_SUITE("server") {
  TEST_CASE("stylus poses over loopback follow the script tick for tick") {
    const StylusScript script = line_script();
    HapticServer server(script, {});
    REQUIRE(server.port() != 0);
    auto client = HapticClient::connect("127.0.0.1", server.port(), 2000ms, [&] { server.step(); });
    CHECK(server.client_connected());
    for (int i = 0; i < 20; ++i) {
      server.run_ticks(10);
      client.send(GetStylusPose{});
      const auto p = expect<StylusPose>(client, server);
      const auto s = from_wire(p);
      CHECK(s.pose == script.sample(p.tick).pose);
      CHECK(s.button);
      CHECK(p.tick < server.tick());
    }
  }

  TEST_CASE("forces are clamped and logged") {
    HapticServer server(line_script(), {});
    auto client = HapticClient::connect("127.0.0.1", server.port(), 2000ms, [&] { server.step(); });
    client.send(SetForce{{10, 0, 0}, 2});
    while (server.force_log().empty()) server.step();
    const auto& rec = server.force_log().back();
    CHECK(rec.commanded.x() == 10.0);
    CHECK(rec.output.norm() == doctest::Approx(6.4).epsilon(1e-12));
    CHECK(rec.output.norm() <= 6.4);
    CHECK(rec.clamped);
    CHECK(rec.output.normalized().isApprox(Vec3::UnitX(), 1e-12));

    server.run_ticks(5000);  // sustained overdrive: governor pulls the RMS down to the rating
    CHECK(server.current_output().force.norm() == doctest::Approx(1.4).epsilon(0.05));
    CHECK(server.stats().max_output <= 6.4);

    client.send(SetForce{{1, 0, 0}, 7});
    const auto e = expect<Error>(client, server);
    CHECK(e.code == static_cast<std::uint16_t>(ErrorCode::InvalidValue));
    client.send(StylusPose{});
    CHECK(expect<Error>(client, server).code == static_cast<std::uint16_t>(ErrorCode::Unsupported));
    client.send(Hello{9});
    CHECK(expect<Error>(client, server).code == static_cast<std::uint16_t>(ErrorCode::VersionMismatch));
  }

  TEST_CASE("client stalls and disconnects never cost the haptic loop a tick") {
    HapticServer server(line_script(), {});
    server.run_ticks(100);
    CHECK(server.tick() == 100);  // no client at all
    {
      auto client = HapticClient::connect("127.0.0.1", server.port(), 2000ms, [&] { server.step(); });
      client.send(SetForce{{0.5, 0, 0}, 2});
      const auto before = server.tick();
      server.run_ticks(1000);  // client silent for a simulated second
      CHECK(server.tick() == before + 1000);
      CHECK(server.current_output().force.x() == doctest::Approx(0.5));
    }  // client socket closed here
    const auto before = server.tick();
    server.run_ticks(50);
    CHECK(server.tick() == before + 50);
    CHECK_FALSE(server.client_connected());
    CHECK(server.current_output().force == Vec3::Zero());
    CHECK(server.stats().disconnects == 1);
  }

  TEST_CASE("stale forces drop when not held") {
    ServerConfig cfg;
    cfg.hold_last_force = false;
    cfg.stale_ticks = 20;
    HapticServer server(line_script(), cfg);
    auto client = HapticClient::connect("127.0.0.1", server.port(), 2000ms, [&] { server.step(); });
    client.send(SetForce{{0.3, 0, 0}, 1});
    while (server.current_output().force.isZero()) server.step();
    server.run_ticks(25);
    CHECK(server.current_output().force == Vec3::Zero());
  }

  TEST_CASE("garbage from a client is answered, not fatal") {
    HapticServer server(line_script(), {});
    auto sock = net::connect_tcp("127.0.0.1", server.port(), 2000ms);
    const std::vector<std::uint8_t> junk{1, 0, 0, 0, 0x42};
    net::send_some(sock, junk);
    for (int i = 0; i < 50; ++i) server.step();
    CHECK(server.stats().invalid_frames == 1);
    CHECK(server.client_connected());
    const std::vector<std::uint8_t> huge{0xff, 0xff, 0xff, 0x7f};
    net::send_some(sock, huge);
    for (int i = 0; i < 50; ++i) server.step();
    CHECK_FALSE(server.client_connected());
  }

  TEST_CASE("client cycle renders exactly what the session renders") {
    const auto script = fixture::push_script();
    HapticServer server(script, {});
    auto client = HapticClient::connect("127.0.0.1", server.port(), 2000ms, [&] { server.step(); });
    runtime::ManipulationSession remote(fixture::cube_session());
    runtime::ManipulationSession local(fixture::cube_session());
    CycleOptions opt;
    opt.pump = [&] { server.step(); };
    int forces = 0;
    while (server.tick() < 2500) {
      server.run_ticks(9);
      const auto r = client_cycle(client, remote, opt);
      REQUIRE(r.status == CycleStatus::Ok);
      local.update_stylus(*r.stylus);
      const auto step = local.proximity_step();
      CHECK(step.committed == r.step.committed);
      const auto f = local.haptic_force();
      const Vec3 device = local.device_to_scene().transpose() * f.scene.force;
      REQUIRE(r.sent);
      CHECK(r.sent->force == std::array<double, 3>{device.x(), device.y(), device.z()});
      if (!device.isZero()) ++forces;
      CHECK(remote.committed_pose() == local.committed_pose());
    }
    CHECK(forces > 10);
  }

  TEST_CASE("reconnect resumes from the committed state") {
    const auto script = fixture::push_script();
    HapticServer server(script, {});
    runtime::ManipulationSession session(fixture::cube_session());
    CycleOptions opt;
    opt.pump = [&] { server.step(); };
    Pose held;
    {
      auto client = HapticClient::connect("127.0.0.1", server.port(), 2000ms, opt.pump);
      for (int i = 0; i < 30; ++i) {
        server.run_ticks(9);
        REQUIRE(client_cycle(client, session, opt).status == CycleStatus::Ok);
      }
      held = session.committed_pose();
      CHECK(held.position.x() > 0.0);
      client.close();
      server.run_ticks(5);
      CHECK_THROWS_AS(client.send(GetStylusPose{}), ConnectionLost);
    }
    session.release();
    CHECK_FALSE(session.engaged());
    CHECK(session.committed_pose() == held);
    auto again = HapticClient::connect("127.0.0.1", server.port(), 2000ms, opt.pump);
    // The script keeps the button down; the first cycle re-engages without a jump.
    const auto r = client_cycle(again, session, opt);
    REQUIRE(r.status == CycleStatus::Ok);
    CHECK(session.committed_pose() == held);
    for (int i = 0; i < 10; ++i) {
      server.run_ticks(9);
      REQUIRE(client_cycle(again, session, opt).status == CycleStatus::Ok);
    }
    CHECK(session.committed_pose().position.x() > held.position.x());
  }
}
