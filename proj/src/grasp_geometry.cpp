#include "graspmt/grasp_geometry.hpp"

#include <algorithm>
#include <cmath>

namespace graspmt {

Mat3 Grasp::rotation() const { return rotation_from_vectors(approach, closing); }

Mat3 rotation_from_vectors(const Vec3& v_approach, const Vec3& v_closing) {
  double na = v_approach.norm(), nc = v_closing.norm();
  if (na < 1e-12 || nc < 1e-12)
    throw std::invalid_argument("rotation_from_vectors: zero-length input");
  Vec3 a = v_approach / na;
  Vec3 c = v_closing / nc;
  if (std::abs(a.dot(c)) > 1.0 - 1e-6)
    throw std::invalid_argument("rotation_from_vectors: vectors are near-parallel");
  Vec3 c_perp = (c - a.dot(c) * a).normalized();
  Mat3 r;
  r.col(0) = a;
  r.col(1) = c_perp;
  r.col(2) = a.cross(c_perp);
  return r;
}

Vec3 canonicalize_close(const Vec3& v_closing) {
  if (v_closing.norm() < 1e-12)
    throw std::invalid_argument("canonicalize_close: zero vector");
  return v_closing.x() < 0.0 ? Vec3(-v_closing) : v_closing;
}

Grasp make_grasp(const Vec3& t, const Vec3& v_approach, const Vec3& v_closing, double width,
                 double depth, double score, const GripperModel& gripper, int instance_id) {
  Mat3 r = rotation_from_vectors(v_approach, v_closing);
  Grasp g;
  g.center = t;
  g.approach = r.col(0);
  g.closing = canonicalize_close(r.col(1));
  g.width = std::clamp(width, 0.0, gripper.max_width);
  g.depth = std::max(depth, 0.0);
  g.score = score;
  g.instance_id = instance_id;
  return g;
}

double rotation_angle_deg(const Mat3& r1, const Mat3& r2) {
  double tr = (r1.transpose() * r2).trace();
  double c = std::clamp((tr - 1.0) * 0.5, -1.0, 1.0);
  return rad2deg(std::acos(c));
}

Se3Distance se3_distance(const Grasp& a, const Grasp& b) {
  Se3Distance d;
  d.translation = (a.center - b.center).norm();
  d.rotation = rotation_angle_deg(a.rotation(), b.rotation());
  return d;
}

// span of cloud points along the closing axis inside the closing volume
static bool closing_span(const PointCloud& cloud, const SpatialGrid& grid, const Vec3& t,
                         const Mat3& r, const GripperModel& gr, double& span) {
  Vec3 half_diag(gr.finger_length, gr.max_width * 0.5, gr.finger_height * 0.5);
  double rad = half_diag.norm();
  double smin = 1e30, smax = -1e30;
  for (int i : grid.radius_neighbors(t, rad)) {
    Vec3 q = r.transpose() * (cloud.points.row(i).transpose() - t);
    if (q.x() < -gr.finger_length || q.x() > 0) continue;
    if (std::abs(q.y()) > gr.max_width * 0.5) continue;
    if (std::abs(q.z()) > gr.finger_height * 0.5) continue;
    smin = std::min(smin, q.y());
    smax = std::max(smax, q.y());
  }
  if (smax < smin) return false;
  span = smax - smin;
  return true;
}

std::vector<Grasp> sample_grasp_candidates(const PointCloud& cloud, const GripperModel& gripper,
                                           int per_point, const SamplerParams& params) {
  gripper.validate();
  std::vector<int> seeds;
  for (Eigen::Index i = 0; i < cloud.size(); ++i)
    if (cloud.has_labels && cloud.semantic[i] == 1) seeds.push_back(static_cast<int>(i));
  if (seeds.empty()) return {};

  SpatialGrid grid(cloud.points, std::max(gripper.max_width, gripper.finger_length));

  std::vector<Grasp> out;
  double tilt = deg2rad(params.approach_tilt_deg);
  for (size_t si = 0; si < seeds.size(); si += params.seed_stride) {
    int idx = seeds[si];
    Vec3 p = cloud.points.row(idx).transpose();
    Vec3 n = cloud.normals.row(idx).transpose();
    if (n.norm() < 1e-9) continue;
    n.normalize();
    Vec3 base_approach = -n;

    // tangent basis at the seed point
    Vec3 tmp = std::abs(base_approach.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    Vec3 tu = base_approach.cross(tmp).normalized();
    Vec3 tv = base_approach.cross(tu);

    for (int k = 0; k < per_point; ++k) {
      Vec3 approach = base_approach;
      switch (k % 3) {
        case 1: approach = (base_approach + std::tan(tilt) * tu).normalized(); break;
        case 2: approach = (base_approach + std::tan(tilt) * tv).normalized(); break;
        default: break;
      }
      double ang = M_PI * static_cast<double>(k) / per_point;
      Vec3 closing_raw = std::cos(ang) * tu + std::sin(ang) * tv;
      // re-orthogonalize against the (possibly tilted) approach
      Vec3 closing = closing_raw - approach.dot(closing_raw) * approach;
      if (closing.norm() < 1e-9) continue;
      double depth = params.depths[k % params.depths.size()];
      depth = std::min(depth, gripper.finger_length);
      Vec3 t = p + depth * approach;
      Grasp g = make_grasp(t, approach, closing, gripper.max_width, depth, 0.0, gripper,
                           cloud.has_labels ? cloud.instance_ids[idx] : 0);
      double span = 0;
      if (closing_span(cloud, grid, g.center, g.rotation(), gripper, span))
        g.width = std::clamp(span + params.clearance, 0.0, gripper.max_width);
      out.push_back(g);
    }
  }
  return out;
}

PointGraspLabels map_points_to_grasps(const PointCloud& cloud, const std::vector<Grasp>& grasps,
                                      double radius) {
  const int n = static_cast<int>(cloud.size());
  PointGraspLabels labels;
  labels.grasp_index.assign(n, -1);
  labels.graspable.assign(n, 0);
  labels.ignore.assign(n, 0);

  Eigen::MatrixX3d anchors(grasps.size(), 3);
  for (size_t g = 0; g < grasps.size(); ++g) anchors.row(g) = grasps[g].surface_anchor().transpose();
  SpatialGrid grid;
  if (!grasps.empty()) grid.build(anchors, std::max(radius, 1e-3));

  for (int i = 0; i < n; ++i) {
    int best = -1;
    if (!grasps.empty()) {
      Vec3 p = cloud.points.row(i).transpose();
      for (int g : grid.radius_neighbors(p, radius)) {
        if (best < 0 || grasps[g].score > grasps[best].score) best = g;
      }
    }
    if (best >= 0) {
      labels.grasp_index[i] = best;
      labels.graspable[i] = 1;
    } else if (cloud.has_labels && cloud.semantic[i] == 1) {
      // foreground point with no ground-truth grasp: excluded from the objective
      labels.ignore[i] = 1;
    }
  }
  return labels;
}

}  // namespace graspmt
