#include "graspmt/labeling.hpp"

#include "graspmt/collision.hpp"
#include "graspmt/scoring.hpp"

namespace graspmt {

SceneLabels build_scene_labels(const PointCloud& cloud, const PointCloud& dense,
                               const RunConfig& config, uint64_t scene_seed) {
  SamplerParams sp = config.sampler;
  sp.seed = scene_seed;
  std::vector<Grasp> candidates =
      sample_grasp_candidates(cloud, config.gripper, config.sampler_per_point, sp);

  // re-estimate widths from dense-cloud contacts at full opening
  SpatialGrid dense_grid(dense.points, collision_grid_cell(config.gripper));
  for (Grasp& g : candidates) {
    Grasp open = make_grasp(g.center, g.approach, g.closing, config.gripper.max_width, g.depth,
                            0.0, config.gripper, g.instance_id);
    if (auto c = find_contacts(open, dense, dense_grid, config.gripper)) {
      double span = std::abs((c->p1 - c->p2).dot(open.closing));
      g = make_grasp(g.center, g.approach, g.closing, span + config.sampler.clearance, g.depth,
                     0.0, config.gripper, g.instance_id);
    }
  }
  score_grasps(candidates, dense, config.gripper);

  SceneLabels labels;
  for (const Grasp& g : candidates)
    if (g.score > config.label_score_min) labels.grasps.push_back(g);

  PointGraspLabels map = map_points_to_grasps(cloud, labels.grasps, config.label_map_radius);
  labels.grasp_index = std::move(map.grasp_index);
  labels.graspable = std::move(map.graspable);
  labels.ignore = std::move(map.ignore);

  // per-point collision labels for the mapped grasps
  const int n = static_cast<int>(cloud.size());
  labels.coll_valid.assign(n, 0);
  labels.coll_label.assign(n, 0);
  std::vector<int> grasp_coll(labels.grasps.size(), 1);
  if (!labels.grasps.empty()) {
#pragma omp parallel for schedule(dynamic, 16)
    for (int g = 0; g < static_cast<int>(labels.grasps.size()); ++g)
      grasp_coll[g] = check_collision(labels.grasps[g], dense, dense_grid, config.gripper).c;
  }
  std::vector<int> pos, neg;
  for (int i = 0; i < n; ++i) {
    if (labels.grasp_index[i] < 0) continue;
    labels.coll_valid[i] = 1;
    labels.coll_label[i] = grasp_coll[labels.grasp_index[i]];
    (labels.coll_label[i] ? pos : neg).push_back(i);
  }
  // cap the majority class at balance * minority (deterministic subsample)
  if (config.collision_balance > 0 && !pos.empty() && !neg.empty()) {
    std::vector<int>& maj = pos.size() > neg.size() ? pos : neg;
    size_t cap = static_cast<size_t>(config.collision_balance *
                                     std::min(pos.size(), neg.size()));
    if (cap >= 1 && maj.size() > cap) {
      Rng rng(scene_seed ^ 0x3C6EF372FE94F82Bull);
      for (size_t i = 0; i + 1 < maj.size(); ++i)
        std::swap(maj[i], maj[i + rng.index(maj.size() - i)]);
      for (size_t i = cap; i < maj.size(); ++i) labels.coll_valid[maj[i]] = 0;
    }
  }
  return labels;
}

}  // namespace graspmt
