#include "doctest.h"

#include "support/oracles.hpp"

#include "hapticsim/server.hpp"
#include "hapticsim/stylus_script.hpp"
#include "hapticsim/wire.hpp"

#include <numbers>
#include <set>
#include <random>

using namespace hapticsim;
using namespace hapticsim::protocol;

namespace {

std::vector<std::uint8_t> hex(std::string_view text) {
  std::vector<std::uint8_t> out;
  std::string digits;
  for (char c : text)
    if (c != ' ') digits.push_back(c);
  REQUIRE(digits.size() % 2 == 0);
  for (std::size_t i = 0; i < digits.size(); i += 2)
    out.push_back(static_cast<std::uint8_t>(std::stoi(digits.substr(i, 2), nullptr, 16)));
  return out;
}

// f64 little-endian words used in the golden frames.
constexpr std::string_view Z = "0000000000000000";
constexpr std::string_view ONE = "000000000000f03f";
constexpr std::string_view MINUS_ONE = "000000000000f0bf";
constexpr std::string_view HALF = "000000000000e03f";

std::string cat(std::initializer_list<std::string_view> parts) {
  std::string s;
  for (auto p : parts) s += p;
  return s;
}

Message random_message(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-10, 10);
  std::uniform_int_distribution<int> byte(0, 255);
  auto str = [&] {
    std::string s(static_cast<std::size_t>(byte(rng) % 40), '\0');
    for (auto& c : s) c = static_cast<char>(byte(rng));
    return s;
  };
  auto pose7 = [&] {
    Pose7 p;
    for (auto& x : p) x = u(rng);
    return p;
  };
  switch (std::uniform_int_distribution<int>(0, 9)(rng)) {
    case 0: return GetStylusPose{};
    case 1: return StylusPose{rng(), {u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng), u(rng)},
                              static_cast<std::uint8_t>(byte(rng))};
    case 2: return SetForce{{u(rng), u(rng), u(rng)}, static_cast<std::uint8_t>(byte(rng))};
    case 3: return EngageSelect{str()};
    case 4: return Release{};
    case 5: return SetScaleMode{static_cast<std::uint8_t>(byte(rng)), u(rng)};
    case 6: {
      SetFrameMode m{static_cast<std::uint8_t>(byte(rng)), std::nullopt};
      if (byte(rng) % 2) m.frame = pose7();
      return m;
    }
    case 7: {
      SceneSnapshot m;
      const int n = byte(rng) % 6;
      for (int i = 0; i < n; ++i) m.poses.emplace_back(str(), pose7());
      return m;
    }
    case 8: return Error{static_cast<std::uint16_t>(rng()), str()};
    default: return Hello{static_cast<std::uint8_t>(byte(rng))};
  }
}

}  // namespace

TEST_SUITE("protocol") {
  TEST_CASE("golden frames for every message") {
    const std::vector<std::pair<Message, std::string>> golden = {
        {GetStylusPose{}, "01000000 01"},
        {StylusPose{5, {1, 0, -1}, {1, 0, 0, 0}, 1},
         cat({"42000000 02 0500000000000000", ONE, Z, MINUS_ONE, ONE, Z, Z, Z, "01"})},
        {SetForce{{1, 0, 0}, 2}, cat({"1a000000 03", ONE, Z, Z, "02"})},
        {EngageSelect{"cube"}, "07000000 04 0400 63756265"},
        {Release{}, "01000000 05"},
        {SetScaleMode{3, 3.2}, "0a000000 06 03 9a99999999990940"},
        {SetFrameMode{1, std::nullopt}, "03000000 07 01 00"},
        {SetFrameMode{2, Pose7{0.5, 0, 0, 1, 0, 0, 0}}, cat({"3b000000 07 02 01", HALF, Z, Z, ONE, Z, Z, Z})},
        {SceneSnapshot{{{"a", Pose7{0, 0, 0, 1, 0, 0, 0}}}}, cat({"40000000 08 01000000 0100 61", Z, Z, Z, ONE, Z, Z, Z})},
        {Error{4, "bad"}, "08000000 09 0400 0300 626164"},
        {Hello{1}, "02000000 0a 01"},
    };
    std::set<std::size_t> covered;
    for (const auto& [msg, text] : golden) {
      CAPTURE(name_of(tag_of(msg)));
      const auto bytes = hex(text);
      CHECK(encode(msg) == bytes);
      const auto d = decode(bytes);
      REQUIRE(d.status == DecodeStatus::Ok);
      CHECK(d.consumed == bytes.size());
      CHECK(*d.message == msg);
      covered.insert(msg.index());
    }
    CHECK(covered.size() == std::variant_size_v<Message>);
    CHECK(encode(SetForce{}).size() == 30);
  }

  TEST_CASE("little-endian helpers") {
    std::vector<std::uint8_t> out;
    put_u16(out, 0x0102);
    put_u32(out, 0x03040506);
    put_u64(out, 0x0708090a0b0c0d0eULL);
    put_f64(out, 1.0);
    CHECK(out == hex(cat({"0201 06050403 0e0d0c0b0a090807", ONE})));
  }

  TEST_CASE("round trip and canonical re-encoding") {
    std::mt19937_64 rng(99);
    std::vector<std::uint8_t> stream;
    std::vector<Message> sent;
    for (int i = 0; i < 2000; ++i) {
      const Message m = random_message(rng);
      const auto bytes = encode(m);
      const auto d = decode(bytes);
      REQUIRE(d.status == DecodeStatus::Ok);
      CHECK(d.consumed == bytes.size());
      CHECK(*d.message == m);
      CHECK(encode(*d.message) == bytes);
      if (i < 300) {
        encode_into(m, stream);
        sent.push_back(m);
      }
    }
    // Concatenated frames fed in random-sized chunks.
    std::vector<std::uint8_t> buffer;
    std::vector<Message> received;
    std::size_t pos = 0;
    while (pos < stream.size()) {
      const std::size_t n = std::min<std::size_t>(stream.size() - pos, 1 + rng() % 37);
      buffer.insert(buffer.end(), stream.begin() + static_cast<std::ptrdiff_t>(pos),
                    stream.begin() + static_cast<std::ptrdiff_t>(pos + n));
      pos += n;
      for (;;) {
        const auto d = decode(buffer);
        if (d.status == DecodeStatus::NeedMoreBytes) {
          CHECK(d.consumed == 0);
          break;
        }
        REQUIRE(d.status == DecodeStatus::Ok);
        received.push_back(*d.message);
        buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(d.consumed));
      }
    }
    CHECK(buffer.empty());
    CHECK(received == sent);
  }

  TEST_CASE("malformed frames") {
    CHECK(decode({}).status == DecodeStatus::NeedMoreBytes);
    CHECK(decode(hex("1a00")).status == DecodeStatus::NeedMoreBytes);
    CHECK(decode(hex("1a000000 03 00")).status == DecodeStatus::NeedMoreBytes);

    const auto empty = decode(hex("00000000"));
    CHECK(empty.status == DecodeStatus::Invalid);
    CHECK(empty.consumed == 4);

    const auto unknown = decode(hex("01000000 0b ff"));
    CHECK(unknown.status == DecodeStatus::Invalid);
    CHECK(unknown.error.code == static_cast<std::uint16_t>(ErrorCode::UnknownTag));
    CHECK(unknown.consumed == 5);

    auto trailing = encode(SetForce{});
    trailing[0] += 1;
    trailing.push_back(0);
    const auto t = decode(trailing);
    CHECK(t.status == DecodeStatus::Invalid);
    CHECK(t.error.code == static_cast<std::uint16_t>(ErrorCode::BadPayload));
    CHECK(t.consumed == trailing.size());

    const auto truncated = decode(hex("03000000 03 0000"));
    CHECK(truncated.status == DecodeStatus::Invalid);
    CHECK(truncated.error.code == static_cast<std::uint16_t>(ErrorCode::BadPayload));

    CHECK(decode(hex("03000000 07 01 02")).status == DecodeStatus::Invalid);  // presence byte must be 0/1
    CHECK(decode(hex("05000000 08 ffffffff")).status == DecodeStatus::Invalid);  // impossible count

    const auto big = decode(hex("01001000 01"));
    CHECK(big.status == DecodeStatus::TooLarge);
    CHECK(big.error.code == static_cast<std::uint16_t>(ErrorCode::FrameTooLarge));
    CHECK(decode(hex("00001000 01")).status == DecodeStatus::NeedMoreBytes);  // exactly 1 MiB is legal

    CHECK_THROWS_AS(encode(EngageSelect{std::string(70000, 'x')}), EncodeError);
    SceneSnapshot huge;
    huge.poses.assign(20000, {"entity", Pose7{}});
    CHECK_THROWS_AS(encode(huge), EncodeError);
    std::vector<std::uint8_t> keep{1, 2, 3};
    CHECK_THROWS(encode_into(huge, keep));
    CHECK(keep == std::vector<std::uint8_t>{1, 2, 3});
  }

  TEST_CASE("fuzzing never crashes and never over-reads") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int i = 0; i < 20000; ++i) {
      std::vector<std::uint8_t> buf;
      if (i % 2) {
        buf = encode(random_message(rng));
        const int flips = 1 + byte(rng) % 4;
        for (int f = 0; f < flips; ++f) buf[rng() % buf.size()] = static_cast<std::uint8_t>(byte(rng));
        if (byte(rng) % 3 == 0) buf.resize(rng() % (buf.size() + 1));
      } else {
        buf.resize(rng() % 64);
        for (auto& b : buf) b = static_cast<std::uint8_t>(byte(rng));
      }
      // Heap copy sized exactly, so sanitizer builds flag any read past the end.
      std::span<const std::uint8_t> view(buf.data(), buf.size());
      std::size_t guard = 0;
      while (!view.empty() && guard++ < 1000) {
        const auto d = decode(view);
        CHECK(d.consumed <= view.size());
        if (d.status == DecodeStatus::Ok) {
          CHECK(encode(*d.message) == std::vector<std::uint8_t>(view.begin(), view.begin() + static_cast<std::ptrdiff_t>(d.consumed)));
        }
        if (d.status == DecodeStatus::NeedMoreBytes || d.status == DecodeStatus::TooLarge) break;
        REQUIRE(d.consumed > 0);
        view = view.subspan(d.consumed);
      }
    }
  }

  TEST_CASE("wire conversions") {
    mapping::StylusState s;
    s.pose = Pose(Vec3(0.01, -0.02, 0.03), Quat(Eigen::AngleAxisd(0.3, Vec3::UnitY())));
    s.button = true;
    s.tick = 77;
    const auto back = from_wire(to_wire(s));
    CHECK(back.pose == s.pose);
    CHECK(back.button);
    CHECK(back.tick == 77);
    CHECK(from_pose7(to_pose7(s.pose)) == s.pose);
  }

  TEST_CASE("stylus script") {
    ScriptSegment line;
    line.kind = SegmentKind::Line;
    line.duration = 0.1;
    line.target = {0.01, 0, 0};
    ScriptSegment arc;
    arc.kind = SegmentKind::Arc;
    arc.duration = 0.2;
    arc.center = {0, 0, 0};
    arc.axis = Vec3::UnitZ();
    arc.angle = std::numbers::pi / 2;
    ScriptSegment wave;
    wave.kind = SegmentKind::Sinusoid;
    wave.duration = 0.5;
    wave.amplitude = {0, 0, 0.005};
    wave.frequency = 2;
    const StylusScript script(Pose{}, {line, arc, wave}, {{10, true}, {50, false}});
    CHECK(script.total_ticks() == 800);
    CHECK(script.sample(0).pose.position == Vec3::Zero());
    CHECK(script.sample(50).pose.position.isApprox(Vec3(0.005, 0, 0), 1e-12));
    CHECK(script.sample(100).pose.position.x() == 0.01);
    CHECK(script.raw_position(300).isApprox(Vec3(0, 0.01, 0), 1e-12));
    CHECK(script.raw_position(425).z() == doctest::Approx(0.005));  // quarter period of 2 Hz
    CHECK(script.raw_position(5000) == script.raw_position(800));
    CHECK_FALSE(script.sample(9).button);
    CHECK(script.sample(10).button);
    CHECK(script.sample(49).button);
    CHECK_FALSE(script.sample(50).button);
    CHECK(script.sample(123).tick == 123);
    CHECK_NOTHROW(script.validate());

    // Every sample is quantized and equal displacements per tick along a line.
    for (std::uint64_t k = 0; k < 800; k += 7) {
      const Vec3 p = script.sample(k).pose.position;
      CHECK(mapping::quantize(p).position == p);
    }

    ScriptSegment away = line;
    away.target = {0.5, 0, 0};
    CHECK_THROWS_AS(StylusScript(Pose{}, {away}, {}).validate(), std::invalid_argument);
    ScriptSegment bad_axis = arc;
    bad_axis.axis = {0, 0, 2};
    CHECK_THROWS(StylusScript(Pose{}, {bad_axis}, {}));
    ScriptSegment negative = line;
    negative.duration = -1;
    CHECK_THROWS(StylusScript(Pose{}, {negative}, {}));
  }
}
