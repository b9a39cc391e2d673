#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graspmt/common.hpp"

namespace graspmt {

enum class Shape { Box, Cylinder, Sphere };

std::string shape_name(Shape s);
Shape shape_from_name(const std::string& name);

/// One rigid object resting upright on the table. `dims` meaning depends on
/// the shape: box = full extents (x,y,z), cylinder = (radius, height, 0),
/// sphere = (radius, 0, 0). `position` is the shape center in world frame,
/// `yaw` its rotation about +z.
struct ObjectSpec {
  Shape shape = Shape::Box;
  Vec3 dims = Vec3::Zero();
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
  int instance_id = 0;
  Vec3 color = Vec3::Zero();
};

struct CameraModel {
  Vec3 position = Vec3(0.55, -0.35, 0.45);
  Vec3 look_at = Vec3(0.0, 0.0, 0.05);
  double fx = 138.0, fy = 138.0;
  double cx = 80.0, cy = 60.0;
  int width = 160, height = 120;
};

struct SceneSpec {
  uint64_t seed = 0;
  // table plane z = 0, rectangle |x| <= table_half_x, |y| <= table_half_y
  double table_half_x = 0.35, table_half_y = 0.35;
  Vec3 workspace_min = Vec3(-0.22, -0.22, -0.005);
  Vec3 workspace_max = Vec3(0.22, 0.22, 0.3);
  CameraModel camera;
  std::vector<ObjectSpec> objects;
};

struct PointCloud {
  Eigen::MatrixX3d points;      // world positions (meters)
  Eigen::MatrixX3d normals;     // outward unit surface normals
  Eigen::MatrixX3d colors;      // RGB in [0,1]
  Eigen::MatrixX3d normalized;  // workspace-normalized coordinates in [-1,1]
  std::vector<int> instance_ids;     // 0 = background
  std::vector<uint8_t> semantic;     // 0 = background, 1 = foreground
  bool has_labels = false;

  Eigen::Index size() const { return points.rows(); }
  /// N x 9 network input: xyz, rgb, normalized coords.
  Eigen::MatrixXd features() const;
};

struct SceneGenParams {
  Vec3 workspace_min = Vec3(-0.22, -0.22, -0.005);
  Vec3 workspace_max = Vec3(0.22, 0.22, 0.3);
  double placement_margin = 0.005;
  int max_total_retries = 2000;
};

/// Rejection-samples `n_objects` upright primitives onto the table.
/// Deterministic in `seed`. Throws std::runtime_error when placement fails
/// within the retry budget and std::invalid_argument for n_objects > 16.
SceneSpec generate_scene(uint64_t seed, int n_objects, const SceneGenParams& params = {});

/// Single-view capture: one ray per pixel, nearest-hit z-buffering, labels
/// inherited from the hit primitive (table = background). Exactly n_points
/// are returned (subsampled without replacement when more pixels hit,
/// with replacement when fewer). Throws when no geometry is visible.
PointCloud render_partial_cloud(const SceneSpec& scene, int n_points,
                                ExecMode mode = ExecMode::Parallel);

/// Workspace crop + resample to exactly n_target points + recompute the
/// normalized coordinate channels. Throws when the crop is empty.
PointCloud preprocess(const PointCloud& cloud, const Vec3& workspace_min,
                      const Vec3& workspace_max, int n_target, uint64_t seed = 0);

/// Dense occlusion-free cloud sampled analytically from every primitive plus
/// the table rectangle; labeling and evaluation oracle (the rendered partial
/// cloud has no back-side points to contact or collide with).
PointCloud sample_scene_cloud(const SceneSpec& scene, int points_per_object = 1500,
                              int table_points = 3000, uint64_t seed = 0);

// --- analytic primitive queries (exposed for oracles and labeling) ---

/// Signed distance from world point to the object surface (< 0 inside).
double object_sdf(const ObjectSpec& obj, const Vec3& p);

/// Outward surface normal at a world point on (or near) the surface.
Vec3 object_normal(const ObjectSpec& obj, const Vec3& p);

/// Ray/primitive intersection; returns hit parameter t > tmin or nullopt.
std::optional<double> object_raycast(const ObjectSpec& obj, const Vec3& origin, const Vec3& dir,
                                     double tmin = 1e-6);

/// Deterministic surface sample (u in [0,1)^2-ish domain folded from rng).
Vec3 object_surface_sample(const ObjectSpec& obj, Rng& rng);

}  // namespace graspmt
