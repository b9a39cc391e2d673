// Serial vs OpenMP comparisons for the batch kernels.

#include <benchmark/benchmark.h>

#include "graspmt/clustering.hpp"
#include "graspmt/collision.hpp"
#include "graspmt/scene.hpp"
#include "graspmt/scoring.hpp"

using namespace graspmt;

namespace {

struct Fixture {
  SceneSpec scene;
  PointCloud cloud;
  std::vector<Grasp> grasps;
  GripperModel gripper;

  Fixture() {
    scene = generate_scene(7, 5);
    cloud = render_partial_cloud(scene, 8192, ExecMode::Serial);
    SamplerParams sp;
    sp.seed = 7;
    grasps = sample_grasp_candidates(cloud, gripper, 4, sp);
    if (grasps.size() > 512) grasps.resize(512);
  }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

void bm_render(benchmark::State& state) {
  ExecMode mode = state.range(0) ? ExecMode::Parallel : ExecMode::Serial;
  for (auto _ : state)
    benchmark::DoNotOptimize(render_partial_cloud(fixture().scene, 8192, mode));
}

void bm_collision_batch(benchmark::State& state) {
  ExecMode mode = state.range(0) ? ExecMode::Parallel : ExecMode::Serial;
  const Fixture& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        generate_collision_dataset(f.grasps, f.cloud, f.gripper, 0.0, 0, mode));
}

void bm_score_batch(benchmark::State& state) {
  ExecMode mode = state.range(0) ? ExecMode::Parallel : ExecMode::Serial;
  const Fixture& f = fixture();
  std::vector<Grasp> grasps = f.grasps;
  for (auto _ : state) {
    score_grasps(grasps, f.cloud, f.gripper, {}, mode);
    benchmark::DoNotOptimize(grasps);
  }
}

void bm_meanshift(benchmark::State& state) {
  ExecMode mode = state.range(0) ? ExecMode::Parallel : ExecMode::Serial;
  Rng rng(11);
  Eigen::MatrixXd emb(2000, 16);
  for (int i = 0; i < emb.rows(); ++i) {
    int c = i % 5;
    for (int j = 0; j < emb.cols(); ++j)
      emb(i, j) = 4.0 * c * (j == 0) + 0.2 * rng.normal();
  }
  for (auto _ : state) benchmark::DoNotOptimize(meanshift(emb, 1.5, 100, 1e-4, mode));
}

}  // namespace

BENCHMARK(bm_render)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_collision_batch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_score_batch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_meanshift)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
