#pragma once

#include <optional>

#include "graspmt/grasp_geometry.hpp"

namespace graspmt {

/// Antipodal contact pair; normals point inward (into the object).
struct ContactPair {
  Vec3 p1, p2;
  Vec3 n1, n2;
};

struct FrictionSweep {
  std::vector<double> mu_values = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

  void validate() const {
    if (mu_values.empty()) throw std::invalid_argument("FrictionSweep: empty");
    double prev = 0.0;
    for (double mu : mu_values) {
      if (mu <= prev) throw std::invalid_argument("FrictionSweep: values must be ascending and > 0");
      prev = mu;
    }
  }
};

/// First cloud points met by each finger face along the closing axis inside
/// the closing volume; nullopt when either side is empty.
std::optional<ContactPair> find_contacts(const Grasp& grasp, const PointCloud& cloud,
                                         const GripperModel& gripper);
std::optional<ContactPair> find_contacts(const Grasp& grasp, const PointCloud& cloud,
                                         const SpatialGrid& grid, const GripperModel& gripper);

/// Closed-cone antipodal test: the contact line lies within arctan(mu) of
/// both inward normals. Throws for degenerate (coincident) contacts.
bool is_antipodal(const ContactPair& contacts, double mu);

/// 1 - mu*/mu_max where mu* is the smallest sweep value passing the
/// antipodal test; 0 when no value passes or no contacts exist.
double force_closure_score(const Grasp& grasp, const PointCloud& cloud,
                           const GripperModel& gripper, const FrictionSweep& sweep = {});
double force_closure_score(const Grasp& grasp, const PointCloud& cloud, const SpatialGrid& grid,
                           const GripperModel& gripper, const FrictionSweep& sweep = {});

/// Scores every grasp in place (score field overwritten).
void score_grasps(std::vector<Grasp>& grasps, const PointCloud& cloud,
                  const GripperModel& gripper, const FrictionSweep& sweep = {},
                  ExecMode mode = ExecMode::Parallel);

}  // namespace graspmt
