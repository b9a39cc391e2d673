#include "graspmt/nms.hpp"

#include <algorithm>
#include <map>

namespace graspmt {

namespace {

bool suppresses(const Grasp& kept, const Grasp& other, const NmsConfig& cfg) {
  Se3Distance d = se3_distance(kept, other);
  bool under_t = d.translation < cfg.epsilon_t;
  bool under_r = d.rotation < cfg.epsilon_r;
  return cfg.conjunction ? (under_t && under_r) : (under_t || under_r);
}

void sort_output(std::vector<std::pair<Grasp, int>>& kept) {
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.first.score != b.first.score) return a.first.score > b.first.score;
    if (a.first.instance_id != b.first.instance_id)
      return a.first.instance_id < b.first.instance_id;
    return a.second < b.second;  // stable input order
  });
}

}  // namespace

std::vector<Grasp> instance_pose_nms(const Prediction& pred, const NmsConfig& config) {
  if (pred.grasps.size() != pred.instance_ids.size() ||
      pred.grasps.size() != pred.collision_free.size())
    throw std::invalid_argument("instance_pose_nms: field lengths differ");

  // collision-free grasps partitioned by instance, input order preserved
  std::map<int, std::vector<int>> by_instance;
  for (size_t i = 0; i < pred.grasps.size(); ++i)
    if (pred.collision_free[i]) by_instance[pred.instance_ids[i]].push_back(static_cast<int>(i));

  std::vector<std::pair<Grasp, int>> kept;
  for (auto& [instance, indices] : by_instance) {
    std::stable_sort(indices.begin(), indices.end(), [&](int a, int b) {
      return pred.grasps[a].score > pred.grasps[b].score;
    });
    std::vector<uint8_t> alive(indices.size(), 1);
    int emitted = 0;
    for (size_t a = 0; a < indices.size() && emitted < config.max_keep_per_instance; ++a) {
      if (!alive[a]) continue;
      Grasp g = pred.grasps[indices[a]];
      g.instance_id = instance;
      kept.emplace_back(g, indices[a]);
      ++emitted;
      alive[a] = 0;
      for (size_t b = a + 1; b < indices.size(); ++b)
        if (alive[b] && suppresses(g, pred.grasps[indices[b]], config)) alive[b] = 0;
    }
  }
  sort_output(kept);
  std::vector<Grasp> out;
  out.reserve(kept.size());
  for (auto& [g, idx] : kept) out.push_back(g);
  return out;
}

std::vector<Grasp> instance_pose_nms_reference(const Prediction& pred, const NmsConfig& config) {
  std::map<int, std::vector<int>> by_instance;
  for (size_t i = 0; i < pred.grasps.size(); ++i)
    if (pred.collision_free[i]) by_instance[pred.instance_ids[i]].push_back(static_cast<int>(i));

  std::vector<std::pair<Grasp, int>> kept;
  for (auto& [instance, pool_init] : by_instance) {
    std::vector<int> pool = pool_init;
    int emitted = 0;
    while (!pool.empty() && emitted < config.max_keep_per_instance) {
      // highest score; ties resolved by earliest input position
      size_t best = 0;
      for (size_t i = 1; i < pool.size(); ++i)
        if (pred.grasps[pool[i]].score > pred.grasps[pool[best]].score) best = i;
      Grasp g = pred.grasps[pool[best]];
      g.instance_id = instance;
      kept.emplace_back(g, pool[best]);
      ++emitted;
      int chosen = pool[best];
      std::vector<int> next;
      for (int idx : pool)
        if (idx != chosen && !suppresses(g, pred.grasps[idx], config)) next.push_back(idx);
      pool = next;
    }
  }
  sort_output(kept);
  std::vector<Grasp> out;
  out.reserve(kept.size());
  for (auto& [g, idx] : kept) out.push_back(g);
  return out;
}

}  // namespace graspmt
