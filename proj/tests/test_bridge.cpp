#include "doctest.h"

#include "support/paths.hpp"

#include "bridge/bridge.hpp"
#include "bridge/websocket.hpp"

#include "json.hpp"

#include <chrono>
#include <thread>

using namespace hapticsim;
using namespace hapticsim::bridge;
using nlohmann::json;

namespace {

io::Scenario scenario(const io::Overrides& o = {}) {
  return io::load_scenario(test_data("scenarios/cube-vs-wall.json"), o);
}

json only(const std::vector<std::string>& replies, const std::string& type) {
  for (const auto& r : replies) {
    const json j = json::parse(r);
    if (j["type"] == type) return j;
  }
  FAIL("no '" << type << "' reply");
  return {};
}

std::vector<std::uint8_t> bytes(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_SUITE("bridge") {
  TEST_CASE("websocket accept key") {
    CHECK(ws::accept_key("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo=");
    CHECK(ws::base64(bytes("")) == "");
    CHECK(ws::base64(bytes("f")) == "Zg==");
    CHECK(ws::base64(bytes("fo")) == "Zm8=");
    CHECK(ws::base64(bytes("foo")) == "Zm9v");
  }

  TEST_CASE("websocket framing") {
    for (std::size_t n : {0u, 5u, 125u, 126u, 65535u, 65536u, 200000u}) {
      const std::string payload(n, 'x');
      for (bool masked : {false, true}) {
        const auto f = ws::encode_frame(ws::Opcode::Text, payload, masked ? std::optional<std::uint32_t>(0x11223344) : std::nullopt);
        const auto r = ws::parse_frame(f, masked);
        REQUIRE(r.status == ws::ParseStatus::Ok);
        CHECK(r.consumed == f.size());
        CHECK(r.frame.payload == payload);
        CHECK(r.frame.fin);
        CHECK(ws::parse_frame(std::span(f).first(f.size() - 1), masked).status ==
              (f.size() > 1 ? ws::ParseStatus::NeedMore : ws::ParseStatus::Ok));
      }
    }
    CHECK(ws::encode_frame(ws::Opcode::Text, "hi") == std::vector<std::uint8_t>{0x81, 0x02, 'h', 'i'});
    // RFC 6455 5.7: masked "Hello".
    const std::vector<std::uint8_t> hello{0x81, 0x85, 0x37, 0xfa, 0x21, 0x3d, 0x7f, 0x9f, 0x4d, 0x51, 0x58};
    const auto r = ws::parse_frame(hello, true);
    REQUIRE(r.status == ws::ParseStatus::Ok);
    CHECK(r.frame.payload == "Hello");
    CHECK(ws::encode_frame(ws::Opcode::Text, "Hello", 0x37fa213d) == hello);

    CHECK(ws::parse_frame(ws::encode_frame(ws::Opcode::Text, "x"), true).status == ws::ParseStatus::Error);
    std::vector<std::uint8_t> rsv = ws::encode_frame(ws::Opcode::Text, "x");
    rsv[0] |= 0x40;
    CHECK(ws::parse_frame(rsv, false).status == ws::ParseStatus::Error);
    std::vector<std::uint8_t> bad_op = ws::encode_frame(ws::Opcode::Text, "x");
    bad_op[0] = 0x83;
    CHECK(ws::parse_frame(bad_op, false).status == ws::ParseStatus::Error);
    CHECK(ws::parse_frame(ws::encode_frame(ws::Opcode::Ping, std::string(126, 'p')), false).status ==
          ws::ParseStatus::Error);
    std::vector<std::uint8_t> frag = ws::encode_frame(ws::Opcode::Ping, "p");
    frag[0] &= 0x7f;  // fragmented control frame
    CHECK(ws::parse_frame(frag, false).status == ws::ParseStatus::Error);
    CHECK(ws::parse_frame(ws::encode_frame(ws::Opcode::Binary, std::string(ws::kMaxPayload + 1, 'b')), false).status ==
          ws::ParseStatus::Error);
  }

  TEST_CASE("http upgrade parsing") {
    const std::string head =
        "GET /ws HTTP/1.1\r\nHost: x\r\nUpgrade: websocket\r\nConnection: keep-alive, Upgrade\r\n"
        "Sec-WebSocket-Key: dGhlIHNhbXBsZSBub25jZQ==\r\nSec-WebSocket-Version: 13\r\n\r\n";
    const auto req = ws::parse_request(head);
    REQUIRE(req);
    CHECK(req->method == "GET");
    CHECK(req->target == "/ws");
    CHECK(req->header("sec-websocket-key") == "dGhlIHNhbXBsZSBub25jZQ==");
    CHECK(req->is_websocket_upgrade());
    CHECK_FALSE(ws::parse_request("GET / HTTP/1.1\r\nHost: x\r\n"));
    const auto plain = ws::parse_request("GET /index.html HTTP/1.1\r\nHost: x\r\n\r\n");
    REQUIRE(plain);
    CHECK_FALSE(plain->is_websocket_upgrade());
    const std::string resp = ws::handshake_response("dGhlIHNhbXBsZSBub25jZQ==");
    CHECK(resp.starts_with("HTTP/1.1 101"));
    CHECK(resp.find("Sec-WebSocket-Accept: s3pPLMBiTxaQ9kYGzzhZRbK+xOo=\r\n") != std::string::npos);
  }

  TEST_CASE("core: hello, snapshots and modes") {
    BridgeCore core(scenario());
    CHECK_FALSE(core.external_stylus());
    const auto hello = core.handle(R"({"type":"hello"})");
    const json scene = only(hello, "scene");
    CHECK(scene["entities"].size() == 3);
    CHECK(scene["check_groups"].size() == 1);
    CHECK(scene["device"]["peak_force"] == 6.4);
    CHECK(scene["rates"]["haptic"] == 1000);
    CHECK(scene["entities"][0]["shapes"][0]["vertices"].size() == 8);
    only(hello, "snapshot");

    int snapshots = 0;
    json last;
    for (int k = 0; k < 1000; ++k) {
      for (const auto& m : core.tick()) {
        last = json::parse(m);
        CHECK(last["type"] == "snapshot");
        ++snapshots;
      }
    }
    CHECK(snapshots == 10);
    CHECK(last["tick"] == 900);
    CHECK(last["force"]["magnitude"].get<double>() <= 6.4);
    CHECK(last["state"]["force_class"] == 2);

    const json ack = only(core.handle(R"({"type":"mode","scale":"fine","frame":"screen","force_class":"spring_damper",
                                           "pivot":"self_origin","force_enabled":false})"),
                          "ack");
    CHECK(ack["command"] == "mode");
    CHECK(ack["state"]["scale"] == "fine");
    CHECK(ack["state"]["scale_factor"] == 0.1);
    CHECK(ack["state"]["frame"] == "screen");
    CHECK(ack["state"]["force_class"] == 3);
    CHECK(ack["state"]["force_enabled"] == false);
    CHECK(ack["state"]["pivot"] == "self_origin");

    const json adaptive = only(core.handle(R"({"type":"mode","scale":"screen","viewport_extent":3.2})"), "ack");
    CHECK(std::abs(adaptive["state"]["scale_factor"].get<double>() - 20.0) <= 1e-12);

    for (const char* bad : {"nope", "[]", R"({"kind":"x"})", R"({"type":"warp"})", R"({"type":"mode","scale":"huge"})",
                            R"({"type":"mode","force_class":7})", R"({"type":"stylus","position":[0,0,0]})",
                            R"({"type":"record","action":"dance"})", R"({"type":"record","action":"disarm"})"}) {
      CAPTURE(bad);
      only(core.handle(bad), "error");
    }
  }

  TEST_CASE("core: recording over the bridge") {
    BridgeCore core(scenario());
    for (int k = 0; k < 100; ++k) core.tick();
    CHECK(only(core.handle(R"({"type":"record","action":"arm","mode":"auto_distance","value":0.005})"), "ack")["state"]
              ["recording"]["armed"] == true);
    only(core.handle(R"({"type":"record","action":"arm"})"), "error");
    for (int k = 0; k < 900; ++k) core.tick();
    const auto out = core.handle(R"({"type":"record","action":"disarm"})");
    const json traj = only(out, "trajectory");
    CHECK(traj["mode"] == "auto_distance");
    CHECK(traj["frames"].size() > 5);
    for (const auto& f : traj["frames"]) CHECK(f["entity_id"] == "cube");
    CHECK(only(out, "ack")["state"]["recording"]["armed"] == false);
  }

  TEST_CASE("core: external stylus drives the session") {
    BridgeCore core(scenario({{"stylus", "external"}}));
    REQUIRE(core.external_stylus());
    const Pose before = core.session().scene().entity("cube").pose;
    CHECK(core.handle(R"({"type":"stylus","position":[0,0,0],"button":true})").empty());  // high-rate input: no reply
    for (int k = 0; k < 20; ++k) core.tick();
    core.handle(R"({"type":"stylus","position":[0.01,0,0.000013],"button":true})");
    for (int k = 0; k < 20; ++k) core.tick();
    const Pose after = core.session().scene().entity("cube").pose;
    CHECK((after.position - before.position).isApprox(Vec3(0.01, 0, 0.00002), 1e-12));  // quantized input
    only(core.handle(R"({"type":"stylus","position":[0,0]})"), "error");
  }

  TEST_CASE("server: real handshake and messages over loopback") {
    BridgeCore core(scenario());
    BridgeServerOptions opt;
    opt.port = 0;
    BridgeServer server(core, opt);
    REQUIRE(server.port() != 0);
    auto sock = net::connect_tcp("127.0.0.1", server.port(), std::chrono::milliseconds(2000));
    const std::string req =
        "GET / HTTP/1.1\r\nHost: localhost\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
        "Sec-WebSocket-Key: dGhlIHNhbXBsZSBub25jZQ==\r\nSec-WebSocket-Version: 13\r\n\r\n";
    net::send_some(sock, std::span(reinterpret_cast<const std::uint8_t*>(req.data()), req.size()));

    std::vector<std::uint8_t> in;
    auto pump = [&](int steps) {
      for (int i = 0; i < steps; ++i) {
        server.step();
        std::array<std::uint8_t, 65536> buf;
        for (;;) {
          const auto r = net::recv_some(sock, buf);
          if (r.status != net::IoStatus::Ok) break;
          in.insert(in.end(), buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(r.bytes));
        }
      }
    };
    pump(20);
    const std::string text(in.begin(), in.end());
    const auto end = text.find("\r\n\r\n");
    REQUIRE(end != std::string::npos);
    CHECK(text.starts_with("HTTP/1.1 101"));
    CHECK(text.find("s3pPLMBiTxaQ9kYGzzhZRbK+xOo=") != std::string::npos);
    in.erase(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(end + 4));
    CHECK(server.clients() == 1);

    const auto hello = ws::encode_frame(ws::Opcode::Text, R"({"type":"hello"})", 0xdeadbeef);
    net::send_some(sock, hello);
    pump(200);
    std::vector<std::string> types;
    for (;;) {
      const auto r = ws::parse_frame(in, false);
      if (r.status != ws::ParseStatus::Ok) break;
      types.push_back(json::parse(r.frame.payload)["type"]);
      in.erase(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(r.consumed));
    }
    CHECK(std::count(types.begin(), types.end(), "scene") == 1);
    CHECK(std::count(types.begin(), types.end(), "snapshot") >= 2);  // reply plus broadcasts

    net::send_some(sock, ws::encode_frame(ws::Opcode::Text, "x"));  // unmasked: protocol error
    pump(20);
    CHECK(server.clients() == 0);
  }
}
