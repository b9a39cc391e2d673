#pragma once

#include <array>

#include "graspmt/grasp_geometry.hpp"

namespace graspmt {

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();  // columns are box axes
  Vec3 half = Vec3::Zero();

  bool contains(const Vec3& p) const {
    Vec3 q = axes.transpose() * (p - center);
    return (q.cwiseAbs().array() <= half.array()).all();
  }
  double volume() const { return 8.0 * half.prod(); }
  void aabb(Vec3& lo, Vec3& hi) const {
    Vec3 ext = axes.cwiseAbs() * half;
    lo = center - ext;
    hi = center + ext;
  }
};

struct CollisionLabel {
  int grasp_index = -1;
  int c = 1;  // 1 = collision-free, 0 = in collision
  int contact_exempt_count = 0;
};

/// World-frame occupancy: [finger along +closing, finger along -closing,
/// base bar behind the fingers]. Finger inner faces sit at +-width/2.
std::array<OrientedBox, 3> gripper_occupancy(const Grasp& grasp, const GripperModel& gripper);

/// Closing region between the finger inner faces; points strictly inside are
/// exempt from collision.
OrientedBox closing_region(const Grasp& grasp, const GripperModel& gripper);

CollisionLabel check_collision(const Grasp& grasp, const PointCloud& cloud,
                               const SpatialGrid& grid, const GripperModel& gripper);
CollisionLabel check_collision(const Grasp& grasp, const PointCloud& cloud,
                               const GripperModel& gripper);

/// Serial all-points reference; must agree boolean-exactly with the
/// grid-accelerated variant.
CollisionLabel check_collision_brute(const Grasp& grasp, const PointCloud& cloud,
                                     const GripperModel& gripper);

/// Grid cell size heuristic used by batch queries.
double collision_grid_cell(const GripperModel& gripper);

struct CollisionDataset {
  std::vector<CollisionLabel> labels;    // one per input grasp, in order
  std::vector<int> retained;             // indices after optional rebalancing
  bool single_class_warning = false;
};

/// Labels every grasp; when balance > 0 the larger class is subsampled to the
/// requested positive:negative ratio (within one item) with a fixed seed.
CollisionDataset generate_collision_dataset(const std::vector<Grasp>& grasps,
                                            const PointCloud& cloud, const GripperModel& gripper,
                                            double balance = 0.0, uint64_t seed = 0,
                                            ExecMode mode = ExecMode::Parallel);

}  // namespace graspmt
