#pragma once

#include <vector>

#include "graspmt/common.hpp"
#include "graspmt/scene.hpp"

namespace graspmt {

struct GripperModel {
  double max_width = 0.085;
  double finger_length = 0.040;
  double finger_thickness = 0.010;
  double finger_height = 0.020;
  double base_depth = 0.020;

  void validate() const {
    if (max_width <= 0 || finger_length <= 0 || finger_thickness <= 0 || finger_height <= 0 ||
        base_depth <= 0)
      throw std::invalid_argument("GripperModel: all dimensions must be > 0");
  }
};

/// 6-DoF parallel-jaw grasp: center t, unit approach vector, unit closing
/// vector (orthogonal to approach, x-component >= 0 after canonicalization),
/// opening width, insertion depth and quality score.
struct Grasp {
  Vec3 center = Vec3::Zero();
  Vec3 approach = Vec3(1, 0, 0);
  Vec3 closing = Vec3(0, 1, 0);
  double width = 0.0;
  double depth = 0.0;
  double score = 0.0;
  int instance_id = 0;

  Mat3 rotation() const;
  /// Pre-depth surface anchor: center - depth * approach.
  Vec3 surface_anchor() const { return center - depth * approach; }
};

/// Builds a canonical grasp from raw (possibly non-orthonormal) vectors:
/// approach normalized, closing Gram-Schmidt-orthogonalized and flipped to
/// the x >= 0 half space, width clipped to [0, gripper.max_width].
Grasp make_grasp(const Vec3& t, const Vec3& v_approach, const Vec3& v_closing, double width,
                 double depth, double score, const GripperModel& gripper, int instance_id = 0);

/// Rotation matrix with columns [a, c, a x c] where a = normalized approach
/// and c = closing orthogonalized against a. Throws for near-parallel input.
Mat3 rotation_from_vectors(const Vec3& v_approach, const Vec3& v_closing);

/// Symmetry convention: flip the closing vector when its x-component is
/// negative; exact zero keeps the input sign.
Vec3 canonicalize_close(const Vec3& v_closing);

struct Se3Distance {
  double translation = 0.0;  // meters
  double rotation = 0.0;     // degrees
};

Se3Distance se3_distance(const Grasp& a, const Grasp& b);
double rotation_angle_deg(const Mat3& r1, const Mat3& r2);

struct SamplerParams {
  int seed_stride = 1;            // take every k-th foreground point as seed
  std::vector<double> depths = {0.015, 0.025};
  double approach_tilt_deg = 15;  // perturbation of the anti-normal approach
  double clearance = 0.005;       // width clearance added over contact span
  uint64_t seed = 0;
};

/// Approach-based candidate sampling: anti-normal approaches (plus tilted
/// perturbations) with closing directions swept in the tangent plane; width
/// from the antipodal contact span. Candidates carry score 0; scoring is a
/// separate pass. Returns an empty list when no foreground points exist.
std::vector<Grasp> sample_grasp_candidates(const PointCloud& cloud, const GripperModel& gripper,
                                           int per_point, const SamplerParams& params = {});

struct PointGraspLabels {
  std::vector<int> grasp_index;   // -1: no grasp within the mapping radius
  std::vector<uint8_t> graspable; // 1 iff mapped to a grasp
  std::vector<uint8_t> ignore;    // 1: excluded from the graspable objective
};

/// Maps each point to the best-scoring grasp whose surface anchor lies within
/// `radius` (default 5 mm). Points with no grasp nearby: background points
/// become negatives, foreground points are flagged ignore.
PointGraspLabels map_points_to_grasps(const PointCloud& cloud, const std::vector<Grasp>& grasps,
                                      double radius = 0.005);

}  // namespace graspmt
