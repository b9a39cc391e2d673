#pragma once

#include "graspmt/grasp_geometry.hpp"

namespace graspmt {

struct NmsConfig {
  double epsilon_t = 0.010;  // meters
  double epsilon_r = 30.0;   // degrees
  int max_keep_per_instance = std::numeric_limits<int>::max();
  // suppression rule: both distance components strictly under threshold
  // (conjunction) vs either one (disjunction, for sensitivity studies)
  bool conjunction = true;
};

struct Prediction {
  std::vector<int> instance_ids;        // per grasp
  std::vector<Grasp> grasps;
  std::vector<uint8_t> collision_free;  // 1 = keep
};

/// Instance-based pose NMS: discard colliding grasps, partition by instance,
/// greedily keep the best-scoring grasp per instance and suppress neighbors
/// within epsilon. Output sorted by score descending, ties by instance id
/// then stable input order.
std::vector<Grasp> instance_pose_nms(const Prediction& pred, const NmsConfig& config = {});

/// Literal O(n^2) transcription kept as the oracle for the implementation.
std::vector<Grasp> instance_pose_nms_reference(const Prediction& pred,
                                               const NmsConfig& config = {});

}  // namespace graspmt
