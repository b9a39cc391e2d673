#pragma once

#include <string>

#include "graspmt/collision.hpp"
#include "graspmt/scoring.hpp"

namespace graspmt {

struct EvalConfig {
  int k = 50;
  std::vector<double> mu_thresholds = {0.2, 0.4, 0.6, 0.8, 1.0, 1.2};

  void validate() const {
    if (k < 1) throw std::invalid_argument("EvalConfig: k must be >= 1");
    double prev = 0.0;
    for (double mu : mu_thresholds) {
      if (mu <= prev) throw std::invalid_argument("EvalConfig: thresholds must ascend and be > 0");
      prev = mu;
    }
  }
};

/// Success = collision-free against the scene cloud AND antipodal at
/// friction coefficient mu.
bool grasp_success(const Grasp& grasp, const PointCloud& cloud, const SpatialGrid& grid,
                   const GripperModel& gripper, double mu);
bool grasp_success(const Grasp& grasp, const PointCloud& cloud, const GripperModel& gripper,
                   double mu);

struct ApResult {
  double ap = 0.0;
  std::vector<double> ap_mu;  // aligned with EvalConfig::mu_thresholds
  bool empty_warning = false;
};

/// Running precision averaged over ranks 1..k; entries beyond the list
/// length count as failures.
double precision_from_successes(const std::vector<uint8_t>& successes, int k);

/// AP over a score-ranked grasp list on one scene.
ApResult precision_at_k(std::vector<Grasp> grasps, const PointCloud& cloud,
                        const GripperModel& gripper, const EvalConfig& config = {});

struct DatasetSummary {
  std::vector<double> mu_thresholds;
  std::vector<std::string> scene_names;
  std::vector<ApResult> per_scene;
  double mean_ap = 0.0;
  double mean_ap_08 = 0.0;
  double mean_ap_04 = 0.0;
  int missing_predictions = 0;

  std::string to_csv() const;
  std::string to_table() const;
};

/// Per-scene AP averaged over the dataset; a missing prediction list
/// (signalled by nullptr) counts as AP 0.
DatasetSummary evaluate_dataset(const std::vector<const std::vector<Grasp>*>& predictions,
                                const std::vector<const PointCloud*>& scenes,
                                const std::vector<std::string>& names,
                                const GripperModel& gripper, const EvalConfig& config = {});

}  // namespace graspmt
