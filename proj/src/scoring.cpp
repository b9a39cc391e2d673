#include "graspmt/scoring.hpp"

#include <cmath>

namespace graspmt {

std::optional<ContactPair> find_contacts(const Grasp& grasp, const PointCloud& cloud,
                                         const SpatialGrid& grid, const GripperModel& gripper) {
  Mat3 r = grasp.rotation();
  double hw = grasp.width * 0.5;
  Vec3 half(gripper.finger_length * 0.5, hw, gripper.finger_height * 0.5);
  double rad = half.norm() + 1e-9;
  Vec3 region_center = grasp.center - (gripper.finger_length * 0.5) * grasp.approach;

  int best_hi = -1, best_lo = -1;
  double s_hi = -1e30, s_lo = 1e30;
  for (int i : grid.radius_neighbors(region_center, rad)) {
    Vec3 q = r.transpose() * (cloud.points.row(i).transpose() - grasp.center);
    if (q.x() < -gripper.finger_length || q.x() > 0) continue;
    if (std::abs(q.y()) > hw) continue;
    if (std::abs(q.z()) > gripper.finger_height * 0.5) continue;
    if (q.y() > s_hi) { s_hi = q.y(); best_hi = i; }
    if (q.y() < s_lo) { s_lo = q.y(); best_lo = i; }
  }
  if (best_hi < 0 || best_lo < 0 || best_hi == best_lo) return std::nullopt;

  ContactPair c;
  c.p1 = cloud.points.row(best_hi).transpose();  // hit first by the +closing finger
  c.p2 = cloud.points.row(best_lo).transpose();
  c.n1 = -cloud.normals.row(best_hi).transpose().normalized();
  c.n2 = -cloud.normals.row(best_lo).transpose().normalized();
  return c;
}

std::optional<ContactPair> find_contacts(const Grasp& grasp, const PointCloud& cloud,
                                         const GripperModel& gripper) {
  SpatialGrid grid(cloud.points, std::max(gripper.max_width, gripper.finger_length));
  return find_contacts(grasp, cloud, grid, gripper);
}

bool is_antipodal(const ContactPair& contacts, double mu) {
  Vec3 line = contacts.p2 - contacts.p1;
  double len = line.norm();
  if (len < 1e-12) throw std::invalid_argument("is_antipodal: degenerate contact pair");
  Vec3 d = line / len;
  double cone = std::atan(mu);
  double a1 = std::acos(std::clamp(d.dot(contacts.n1), -1.0, 1.0));
  double a2 = std::acos(std::clamp((-d).dot(contacts.n2), -1.0, 1.0));
  // closed cone: boundary counts as inside
  return a1 <= cone + 1e-12 && a2 <= cone + 1e-12;
}

double force_closure_score(const Grasp& grasp, const PointCloud& cloud, const SpatialGrid& grid,
                           const GripperModel& gripper, const FrictionSweep& sweep) {
  sweep.validate();
  auto contacts = find_contacts(grasp, cloud, grid, gripper);
  if (!contacts) return 0.0;
  double mu_max = sweep.mu_values.back();
  for (double mu : sweep.mu_values)
    if (is_antipodal(*contacts, mu)) return 1.0 - mu / mu_max;
  return 0.0;
}

double force_closure_score(const Grasp& grasp, const PointCloud& cloud,
                           const GripperModel& gripper, const FrictionSweep& sweep) {
  SpatialGrid grid(cloud.points, std::max(gripper.max_width, gripper.finger_length));
  return force_closure_score(grasp, cloud, grid, gripper, sweep);
}

void score_grasps(std::vector<Grasp>& grasps, const PointCloud& cloud,
                  const GripperModel& gripper, const FrictionSweep& sweep, ExecMode mode) {
  SpatialGrid grid(cloud.points, std::max(gripper.max_width, gripper.finger_length));
  const int n = static_cast<int>(grasps.size());
  if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (int i = 0; i < n; ++i)
      grasps[i].score = force_closure_score(grasps[i], cloud, grid, gripper, sweep);
  } else {
    for (int i = 0; i < n; ++i)
      grasps[i].score = force_closure_score(grasps[i], cloud, grid, gripper, sweep);
  }
}

}  // namespace graspmt
