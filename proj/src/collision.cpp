#include "graspmt/collision.hpp"

#include <algorithm>

namespace graspmt {

std::array<OrientedBox, 3> gripper_occupancy(const Grasp& grasp, const GripperModel& g) {
  Mat3 r = grasp.rotation();
  Vec3 va = r.col(0), vc = r.col(1);
  double hw = grasp.width * 0.5;

  OrientedBox finger_pos, finger_neg, base;
  Vec3 finger_half(g.finger_length * 0.5, g.finger_thickness * 0.5, g.finger_height * 0.5);
  Vec3 finger_back = grasp.center - (g.finger_length * 0.5) * va;
  finger_pos.axes = finger_neg.axes = base.axes = r;
  finger_pos.half = finger_neg.half = finger_half;
  finger_pos.center = finger_back + (hw + g.finger_thickness * 0.5) * vc;
  finger_neg.center = finger_back - (hw + g.finger_thickness * 0.5) * vc;

  base.center = grasp.center - (g.finger_length + g.base_depth * 0.5) * va;
  base.half = Vec3(g.base_depth * 0.5, hw + g.finger_thickness, g.finger_height * 0.5);
  return {finger_pos, finger_neg, base};
}

OrientedBox closing_region(const Grasp& grasp, const GripperModel& g) {
  OrientedBox region;
  region.axes = grasp.rotation();
  region.center = grasp.center - (g.finger_length * 0.5) * region.axes.col(0);
  region.half = Vec3(g.finger_length * 0.5, grasp.width * 0.5, g.finger_height * 0.5);
  return region;
}

static bool strictly_inside(const OrientedBox& b, const Vec3& p) {
  Vec3 q = b.axes.transpose() * (p - b.center);
  return (q.cwiseAbs().array() < b.half.array()).all();
}

CollisionLabel check_collision_brute(const Grasp& grasp, const PointCloud& cloud,
                                     const GripperModel& gripper) {
  auto boxes = gripper_occupancy(grasp, gripper);
  OrientedBox region = closing_region(grasp, gripper);
  CollisionLabel label;
  label.c = 1;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    Vec3 p = cloud.points.row(i).transpose();
    if (strictly_inside(region, p)) {
      ++label.contact_exempt_count;
      continue;
    }
    for (const auto& b : boxes)
      if (b.contains(p)) {
        label.c = 0;
        break;
      }
  }
  return label;
}

CollisionLabel check_collision(const Grasp& grasp, const PointCloud& cloud,
                               const SpatialGrid& grid, const GripperModel& gripper) {
  auto boxes = gripper_occupancy(grasp, gripper);
  OrientedBox region = closing_region(grasp, gripper);
  CollisionLabel label;
  label.c = 1;

  Vec3 lo, hi;
  region.aabb(lo, hi);
  for (int i : grid.query_box(lo, hi))
    if (strictly_inside(region, cloud.points.row(i).transpose())) ++label.contact_exempt_count;

  for (const auto& b : boxes) {
    b.aabb(lo, hi);
    for (int i : grid.query_box(lo, hi)) {
      Vec3 p = cloud.points.row(i).transpose();
      if (strictly_inside(region, p)) continue;
      if (b.contains(p)) {
        label.c = 0;
        return label;  // exempt count beyond this point is not needed once colliding
      }
    }
  }
  return label;
}

CollisionLabel check_collision(const Grasp& grasp, const PointCloud& cloud,
                               const GripperModel& gripper) {
  SpatialGrid grid(cloud.points, collision_grid_cell(gripper));
  return check_collision(grasp, cloud, grid, gripper);
}

double collision_grid_cell(const GripperModel& g) {
  return std::max({g.max_width + 2 * g.finger_thickness, g.finger_length + g.base_depth,
                   g.finger_height});
}

CollisionDataset generate_collision_dataset(const std::vector<Grasp>& grasps,
                                            const PointCloud& cloud, const GripperModel& gripper,
                                            double balance, uint64_t seed, ExecMode mode) {
  if (grasps.empty()) throw std::invalid_argument("generate_collision_dataset: empty grasp list");
  SpatialGrid grid(cloud.points, collision_grid_cell(gripper));
  CollisionDataset ds;
  ds.labels.resize(grasps.size());
  const int n = static_cast<int>(grasps.size());
  if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(dynamic, 32)
    for (int i = 0; i < n; ++i) {
      ds.labels[i] = check_collision(grasps[i], cloud, grid, gripper);
      ds.labels[i].grasp_index = i;
    }
  } else {
    for (int i = 0; i < n; ++i) {
      ds.labels[i] = check_collision(grasps[i], cloud, grid, gripper);
      ds.labels[i].grasp_index = i;
    }
  }

  std::vector<int> pos, neg;
  for (int i = 0; i < n; ++i) (ds.labels[i].c == 1 ? pos : neg).push_back(i);

  if (pos.empty() || neg.empty()) {
    ds.single_class_warning = true;
    ds.retained.resize(n);
    for (int i = 0; i < n; ++i) ds.retained[i] = i;
    return ds;
  }
  if (balance <= 0.0) {
    ds.retained.resize(n);
    for (int i = 0; i < n; ++i) ds.retained[i] = i;
    return ds;
  }

  // subsample the class that exceeds the requested pos:neg ratio
  Rng rng(seed ^ 0xA24BAED4963EE407ull);
  auto subsample = [&rng](std::vector<int>& v, size_t target) {
    for (size_t i = 0; i < target; ++i) {
      size_t j = i + rng.index(v.size() - i);
      std::swap(v[i], v[j]);
    }
    v.resize(target);
  };
  double have = static_cast<double>(pos.size()) / static_cast<double>(neg.size());
  if (have > balance) {
    subsample(pos, std::max<size_t>(1, static_cast<size_t>(std::llround(balance * neg.size()))));
  } else if (have < balance) {
    subsample(neg, std::max<size_t>(1, static_cast<size_t>(std::llround(pos.size() / balance))));
  }
  ds.retained = pos;
  ds.retained.insert(ds.retained.end(), neg.begin(), neg.end());
  std::sort(ds.retained.begin(), ds.retained.end());
  return ds;
}

}  // namespace graspmt
