#include "graspmt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace graspmt {

bool grasp_success(const Grasp& grasp, const PointCloud& cloud, const SpatialGrid& grid,
                   const GripperModel& gripper, double mu) {
  if (check_collision(grasp, cloud, grid, gripper).c != 1) return false;
  auto contacts = find_contacts(grasp, cloud, grid, gripper);
  if (!contacts) return false;
  return is_antipodal(*contacts, mu);
}

bool grasp_success(const Grasp& grasp, const PointCloud& cloud, const GripperModel& gripper,
                   double mu) {
  SpatialGrid grid(cloud.points, collision_grid_cell(gripper));
  return grasp_success(grasp, cloud, grid, gripper, mu);
}

double precision_from_successes(const std::vector<uint8_t>& successes, int k) {
  double acc = 0.0;
  int hits = 0;
  for (int i = 1; i <= k; ++i) {
    if (i <= static_cast<int>(successes.size()) && successes[i - 1]) ++hits;
    acc += static_cast<double>(hits) / i;
  }
  return acc / k;
}

ApResult precision_at_k(std::vector<Grasp> grasps, const PointCloud& cloud,
                        const GripperModel& gripper, const EvalConfig& config) {
  config.validate();
  ApResult result;
  result.ap_mu.assign(config.mu_thresholds.size(), 0.0);
  if (grasps.empty()) {
    result.empty_warning = true;
    return result;
  }
  std::stable_sort(grasps.begin(), grasps.end(),
                   [](const Grasp& a, const Grasp& b) { return a.score > b.score; });
  const int top = std::min<int>(config.k, static_cast<int>(grasps.size()));
  SpatialGrid grid(cloud.points, collision_grid_cell(gripper));

  // collision and contacts are mu-independent; evaluate once per grasp
  std::vector<uint8_t> free(top, 0);
  std::vector<std::optional<ContactPair>> contacts(top);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < top; ++i) {
    free[i] = check_collision(grasps[i], cloud, grid, gripper).c == 1 ? 1 : 0;
    contacts[i] = find_contacts(grasps[i], cloud, grid, gripper);
  }

  for (size_t t = 0; t < config.mu_thresholds.size(); ++t) {
    std::vector<uint8_t> success(top, 0);
    for (int i = 0; i < top; ++i)
      success[i] =
          (free[i] && contacts[i] && is_antipodal(*contacts[i], config.mu_thresholds[t])) ? 1 : 0;
    result.ap_mu[t] = precision_from_successes(success, config.k);
  }
  double sum = 0.0;
  for (double v : result.ap_mu) sum += v;
  result.ap = sum / result.ap_mu.size();
  return result;
}

DatasetSummary evaluate_dataset(const std::vector<const std::vector<Grasp>*>& predictions,
                                const std::vector<const PointCloud*>& scenes,
                                const std::vector<std::string>& names,
                                const GripperModel& gripper, const EvalConfig& config) {
  if (scenes.empty()) throw std::invalid_argument("evaluate_dataset: no scenes");
  if (predictions.size() != scenes.size() || names.size() != scenes.size())
    throw std::invalid_argument("evaluate_dataset: length mismatch");
  config.validate();

  auto mu_index = [&config](double mu) -> int {
    for (size_t i = 0; i < config.mu_thresholds.size(); ++i)
      if (std::abs(config.mu_thresholds[i] - mu) < 1e-12) return static_cast<int>(i);
    return -1;
  };
  int i08 = mu_index(0.8), i04 = mu_index(0.4);

  DatasetSummary summary;
  summary.mu_thresholds = config.mu_thresholds;
  summary.scene_names = names;
  for (size_t s = 0; s < scenes.size(); ++s) {
    ApResult r;
    r.ap_mu.assign(config.mu_thresholds.size(), 0.0);
    if (predictions[s] == nullptr) {
      ++summary.missing_predictions;
    } else {
      r = precision_at_k(*predictions[s], *scenes[s], gripper, config);
    }
    summary.per_scene.push_back(r);
    summary.mean_ap += r.ap;
    if (i08 >= 0) summary.mean_ap_08 += r.ap_mu[i08];
    if (i04 >= 0) summary.mean_ap_04 += r.ap_mu[i04];
  }
  summary.mean_ap /= scenes.size();
  summary.mean_ap_08 /= scenes.size();
  summary.mean_ap_04 /= scenes.size();
  return summary;
}

static int find_mu(const std::vector<double>& grid, double mu) {
  for (size_t i = 0; i < grid.size(); ++i)
    if (std::abs(grid[i] - mu) < 1e-12) return static_cast<int>(i);
  return -1;
}

std::string DatasetSummary::to_csv() const {
  std::ostringstream os;
  int i08 = find_mu(mu_thresholds, 0.8), i04 = find_mu(mu_thresholds, 0.4);
  auto mu_col = [](const ApResult& r, int idx) {
    return idx >= 0 && idx < static_cast<int>(r.ap_mu.size()) ? r.ap_mu[idx] : 0.0;
  };
  os << "scene,AP,AP_0.8,AP_0.4\n";
  for (size_t s = 0; s < per_scene.size(); ++s)
    os << scene_names[s] << ',' << per_scene[s].ap << ',' << mu_col(per_scene[s], i08) << ','
       << mu_col(per_scene[s], i04) << '\n';
  os << "mean," << mean_ap << ',' << mean_ap_08 << ',' << mean_ap_04 << '\n';
  return os.str();
}

std::string DatasetSummary::to_table() const {
  std::ostringstream os;
  char line[128];
  int i08 = find_mu(mu_thresholds, 0.8), i04 = find_mu(mu_thresholds, 0.4);
  auto mu_col = [](const ApResult& r, int idx) {
    return idx >= 0 && idx < static_cast<int>(r.ap_mu.size()) ? r.ap_mu[idx] : 0.0;
  };
  os << "scene                AP       AP_0.8   AP_0.4\n";
  for (size_t s = 0; s < per_scene.size(); ++s) {
    std::snprintf(line, sizeof(line), "%-20s %-8.4f %-8.4f %-8.4f\n", scene_names[s].c_str(),
                  per_scene[s].ap, mu_col(per_scene[s], i08), mu_col(per_scene[s], i04));
    os << line;
  }
  std::snprintf(line, sizeof(line), "%-20s %-8.4f %-8.4f %-8.4f\n", "mean", mean_ap, mean_ap_08,
                mean_ap_04);
  os << line;
  return os.str();
}

}  // namespace graspmt
