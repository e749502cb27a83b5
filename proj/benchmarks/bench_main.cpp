// Hot paths of the three loops: proximity (GJK, group minimum), haptic tick, IK, wire codec.

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/paths.hpp"

#include "hapticsim/io.hpp"
#include "hapticsim/wire.hpp"

#include <benchmark/benchmark.h>

using namespace hapticsim;

namespace {

void BM_Gjk(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const geometry::ConvexShape a(oracle::random_cloud(rng, static_cast<int>(state.range(0)), 0.5));
  const geometry::ConvexShape b(oracle::random_cloud(rng, static_cast<int>(state.range(0)), 0.5));
  const Pose pa(Vec3::Zero(), oracle::random_quat(rng));
  const Pose pb(Vec3(1.2, 0.1, -0.2), oracle::random_quat(rng));
  for (auto _ : state) benchmark::DoNotOptimize(geometry::closest_points(a, pa, b, pb));
}
BENCHMARK(BM_Gjk)->Arg(8)->Arg(64)->Arg(512);

void BM_GroupMinimum(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2, 2);
  std::vector<geometry::SceneEntity> ents;
  geometry::CheckGroupPair pair;
  const int n = static_cast<int>(state.range(0));
  for (int e = 0; e < n; ++e) {
    geometry::SceneEntity ent{"e" + std::to_string(e), {}, Pose(Vec3(u(rng), u(rng), u(rng)), oracle::random_quat(rng)), {}};
    for (int s = 0; s < 3; ++s) ent.shapes.emplace_back(oracle::random_cloud(rng, 24, 0.2));
    (e < n / 2 ? pair.group_a : pair.group_b).push_back(ent.id);
    ents.push_back(std::move(ent));
  }
  for (auto _ : state) benchmark::DoNotOptimize(geometry::group_min_distance(ents, pair));
}
BENCHMARK(BM_GroupMinimum)->Arg(4)->Arg(16)->Arg(64);

// One millisecond of the haptic loop: stylus sample plus force, with the cube in the wall's margin.
void BM_HapticTick(benchmark::State& state) {
  runtime::ManipulationSession session(fixture::cube_session(static_cast<forcefield::ForceClass>(state.range(0))));
  const auto stylus = fixture::line_x(0, 0.068, 1000);
  std::uint64_t k = 0;
  for (; k < 1000; ++k) {
    session.update_stylus(stylus(k));
    if (k % 10 == 0) session.proximity_step();
  }
  for (auto _ : state) {
    session.update_stylus(stylus(k++));
    benchmark::DoNotOptimize(session.haptic_force());
  }
}
BENCHMARK(BM_HapticTick)->Arg(1)->Arg(2)->Arg(3);

void BM_ProximityStep(benchmark::State& state) {
  runtime::ManipulationSession session(fixture::cube_session());
  const auto stylus = fixture::line_x(0, 0.068, 1000);
  std::uint64_t k = 0;
  for (auto _ : state) {
    session.update_stylus(stylus(k++ % 1000));
    benchmark::DoNotOptimize(session.proximity_step());
  }
}
BENCHMARK(BM_ProximityStep);

void BM_Planar2rIk(benchmark::State& state) {
  const auto m = io::load_robot(test_data("robots/planar2r.json"));
  entities::JointConfig q(2);
  q << 0.3, 0.9;
  const Pose target = entities::forward_kinematics(m, q);
  entities::JointConfig seed(2);
  seed << 0.1, 1.2;
  for (auto _ : state) benchmark::DoNotOptimize(entities::inverse_kinematics(m, target, seed));
}
BENCHMARK(BM_Planar2rIk);

void BM_MannequinDls(benchmark::State& state) {
  const auto m = io::load_mannequin(test_data("mannequins/mannequin56.json"));
  const auto s0 = entities::neutral_state(m, Pose::translation({0, 0, 1}));
  const Pose start = entities::hand_pose(m, s0, entities::Hand::Right);
  const Pose target(start.position + Vec3(0.15, 0.1, 0.2), start.orientation);
  for (auto _ : state)
    benchmark::DoNotOptimize(entities::drive_mannequin(m, entities::MannequinTarget::Right, target, std::nullopt, s0));
}
BENCHMARK(BM_MannequinDls)->Unit(benchmark::kMicrosecond);

void BM_WireEncode(benchmark::State& state) {
  const protocol::Message m = protocol::StylusPose{42, {0.01, 0.02, 0.03}, {1, 0, 0, 0}, 1};
  std::vector<std::uint8_t> out;
  for (auto _ : state) {
    out.clear();
    protocol::encode_into(m, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_WireEncode);

void BM_WireDecode(benchmark::State& state) {
  const auto bytes = protocol::encode(protocol::SetForce{{1.0, -2.0, 0.5}, 2});
  for (auto _ : state) benchmark::DoNotOptimize(protocol::decode(bytes));
}
BENCHMARK(BM_WireDecode);

}  // namespace

BENCHMARK_MAIN();
