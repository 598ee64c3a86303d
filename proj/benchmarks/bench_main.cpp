// Copyright 2026 The HPGT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "hpgt/initializer.hpp"
#include "hpgt/metrics.hpp"
#include "hpgt/problem.hpp"
#include "hpgt/simulator.hpp"
#include "hpgt/solver.hpp"
#include "hpgt/spline.hpp"

namespace hpgt {
namespace {

SimData short_set(double duration) {
  SimConfig c;
  c.noiseless = true;
  c.spline_knot_dt = 0.05;
  c.duration = duration;
  c.seed = 3;
  c.calib_seed = 4;
  return simulate(c);
}

const SimData& cached_set() {
  static const SimData d = short_set(10.0);
  return d;
}

void BM_So3Kinematics(benchmark::State& state) {
  const SimData& d = cached_set();
  const So3Spline& s = *d.truth.rot_spline;
  const bool jac = state.range(0) != 0;
  double t = s.t_begin() + 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.kinematics(t, jac));
    t += 1e-3;
    if (t > s.t_end() - 0.5) t = s.t_begin() + 0.5;
  }
}
BENCHMARK(BM_So3Kinematics)->Arg(0)->Arg(1);

void BM_EvaluateBlock(benchmark::State& state) {
  const SimData& d = cached_set();
  const State s = truth_state(d);
  const Problem p = build_problem(d.set, s, EstimatorOptions{});
  const ParamLayout L = make_layout(s, true, false, true);
  const auto kind = static_cast<BlockKind>(state.range(0));
  std::vector<Block> blocks;
  for (const Block& b : p.blocks) {
    if (b.kind == kind) blocks.push_back(b);
  }
  BlockJacobian out;
  std::size_t i = 0;
  for (auto _ : state) {
    evaluate_block(p, s, L, blocks[i], true, out);
    benchmark::DoNotOptimize(out.r);
    i = (i + 1) % blocks.size();
  }
}
BENCHMARK(BM_EvaluateBlock)
    ->Arg(static_cast<int>(BlockKind::kMocap))
    ->Arg(static_cast<int>(BlockKind::kImu))
    ->Arg(static_cast<int>(BlockKind::kDut));

void BM_TotalCost(benchmark::State& state) {
  const SimData& d = cached_set();
  const State s = truth_state(d);
  const Problem p = build_problem(d.set, s, EstimatorOptions{});
  for (auto _ : state) benchmark::DoNotOptimize(total_cost(p, s));
  state.SetItemsProcessed(state.iterations() * std::int64_t(p.blocks.size()));
}
BENCHMARK(BM_TotalCost)->Unit(benchmark::kMillisecond);

void BM_Preintegrate(benchmark::State& state) {
  const SimData& d = cached_set();
  const double t0 = d.set.imu.front().tau + 1.0;
  const std::vector<ImuSample> slice = imu_slice(d.set.imu, t0, t0 + 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(preintegrate(slice));
}
BENCHMARK(BM_Preintegrate);

void BM_Metrics(benchmark::State& state) {
  const SimData& d = cached_set();
  const auto ref = truth_dut_trajectory(d.truth, 90.0);
  for (auto _ : state) benchmark::DoNotOptimize(compute_metrics(ref, ref, MetricMode::kAligned));
}
BENCHMARK(BM_Metrics)->Unit(benchmark::kMillisecond);

void BM_Solve(benchmark::State& state) {
  const SimData& d = cached_set();
  const EstimatorOptions opt;
  const State seed = seed_state(d.set, initialize(d.set, opt), opt);
  for (auto _ : state) {
    Problem p = build_problem(d.set, seed, opt);
    benchmark::DoNotOptimize(solve(p, seed));
  }
}
BENCHMARK(BM_Solve)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace
}  // namespace hpgt

BENCHMARK_MAIN();
