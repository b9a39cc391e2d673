#include "graspmt/scene.hpp"

#include <algorithm>
#include <cmath>

namespace graspmt {

std::string shape_name(Shape s) {
  switch (s) {
    case Shape::Box: return "box";
    case Shape::Cylinder: return "cylinder";
    case Shape::Sphere: return "sphere";
  }
  return "box";
}

Shape shape_from_name(const std::string& name) {
  if (name == "box") return Shape::Box;
  if (name == "cylinder") return Shape::Cylinder;
  if (name == "sphere") return Shape::Sphere;
  throw std::invalid_argument("unknown shape: " + name);
}

Eigen::MatrixXd PointCloud::features() const {
  Eigen::MatrixXd f(points.rows(), 9);
  f << points, colors, normalized;
  return f;
}

// --- object-local frame helpers (yaw-only rotation) ---

static Vec3 to_local(const ObjectSpec& o, const Vec3& p) {
  double c = std::cos(o.yaw), s = std::sin(o.yaw);
  Vec3 d = p - o.position;
  return Vec3(c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z());
}

static Vec3 dir_to_local(const ObjectSpec& o, const Vec3& v) {
  double c = std::cos(o.yaw), s = std::sin(o.yaw);
  return Vec3(c * v.x() + s * v.y(), -s * v.x() + c * v.y(), v.z());
}

static Vec3 dir_to_world(const ObjectSpec& o, const Vec3& v) {
  double c = std::cos(o.yaw), s = std::sin(o.yaw);
  return Vec3(c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z());
}

double object_sdf(const ObjectSpec& obj, const Vec3& p) {
  Vec3 q = to_local(obj, p);
  switch (obj.shape) {
    case Shape::Sphere:
      return q.norm() - obj.dims.x();
    case Shape::Box: {
      Vec3 h = obj.dims * 0.5;
      Vec3 d = q.cwiseAbs() - h;
      double outside = d.cwiseMax(0.0).norm();
      double inside = std::min(0.0, d.maxCoeff());
      return outside + inside;
    }
    case Shape::Cylinder: {
      double r = obj.dims.x(), h2 = obj.dims.y() * 0.5;
      double dr = std::hypot(q.x(), q.y()) - r;
      double dz = std::abs(q.z()) - h2;
      double outside = std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
      double inside = std::min(0.0, std::max(dr, dz));
      return outside + inside;
    }
  }
  return 0.0;
}

Vec3 object_normal(const ObjectSpec& obj, const Vec3& p) {
  Vec3 q = to_local(obj, p);
  Vec3 n_local;
  switch (obj.shape) {
    case Shape::Sphere:
      n_local = q.norm() > 1e-12 ? q.normalized() : Vec3(0, 0, 1);
      break;
    case Shape::Box: {
      Vec3 h = obj.dims * 0.5;
      Vec3 d = q.cwiseAbs() - h;
      int axis;
      d.maxCoeff(&axis);
      n_local = Vec3::Zero();
      n_local[axis] = q[axis] >= 0 ? 1.0 : -1.0;
      break;
    }
    case Shape::Cylinder: {
      double r = obj.dims.x(), h2 = obj.dims.y() * 0.5;
      double dr = std::hypot(q.x(), q.y()) - r;
      double dz = std::abs(q.z()) - h2;
      if (dz > dr) {
        n_local = Vec3(0, 0, q.z() >= 0 ? 1.0 : -1.0);
      } else {
        double rr = std::hypot(q.x(), q.y());
        n_local = rr > 1e-12 ? Vec3(q.x() / rr, q.y() / rr, 0) : Vec3(1, 0, 0);
      }
      break;
    }
  }
  return dir_to_world(obj, n_local);
}

std::optional<double> object_raycast(const ObjectSpec& obj, const Vec3& origin, const Vec3& dir,
                                     double tmin) {
  Vec3 o = to_local(obj, origin);
  Vec3 d = dir_to_local(obj, dir);
  switch (obj.shape) {
    case Shape::Sphere: {
      double r = obj.dims.x();
      double b = o.dot(d), c = o.squaredNorm() - r * r;
      double disc = b * b - c * d.squaredNorm();
      if (disc < 0) return std::nullopt;
      double sq = std::sqrt(disc), dd = d.squaredNorm();
      double t0 = (-b - sq) / dd, t1 = (-b + sq) / dd;
      if (t0 > tmin) return t0;
      if (t1 > tmin) return t1;
      return std::nullopt;
    }
    case Shape::Box: {
      Vec3 h = obj.dims * 0.5;
      double t0 = -1e30, t1 = 1e30;
      for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-12) {
          if (std::abs(o[a]) > h[a]) return std::nullopt;
          continue;
        }
        double ta = (-h[a] - o[a]) / d[a], tb = (h[a] - o[a]) / d[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return std::nullopt;
      }
      if (t0 > tmin) return t0;
      if (t1 > tmin) return t1;
      return std::nullopt;
    }
    case Shape::Cylinder: {
      double r = obj.dims.x(), h2 = obj.dims.y() * 0.5;
      double best = 1e30;
      // side
      double a = d.x() * d.x() + d.y() * d.y();
      if (a > 1e-14) {
        double b = o.x() * d.x() + o.y() * d.y();
        double c = o.x() * o.x() + o.y() * o.y() - r * r;
        double disc = b * b - a * c;
        if (disc >= 0) {
          double sq = std::sqrt(disc);
          for (double t : {(-b - sq) / a, (-b + sq) / a}) {
            if (t > tmin && t < best && std::abs(o.z() + t * d.z()) <= h2) best = t;
          }
        }
      }
      // caps
      if (std::abs(d.z()) > 1e-12) {
        for (double zc : {-h2, h2}) {
          double t = (zc - o.z()) / d.z();
          if (t > tmin && t < best) {
            double x = o.x() + t * d.x(), y = o.y() + t * d.y();
            if (x * x + y * y <= r * r) best = t;
          }
        }
      }
      if (best < 1e29) return best;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

Vec3 object_surface_sample(const ObjectSpec& obj, Rng& rng) {
  Vec3 q;
  switch (obj.shape) {
    case Shape::Sphere:
      q = rng.unit_vector() * obj.dims.x();
      break;
    case Shape::Box: {
      Vec3 h = obj.dims * 0.5;
      // pick a face weighted by area
      double ax = h.y() * h.z(), ay = h.x() * h.z(), az = h.x() * h.y();
      double u = rng.uniform() * (ax + ay + az);
      double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      double s = rng.uniform(-1, 1), t = rng.uniform(-1, 1);
      if (u < ax) q = Vec3(sign * h.x(), s * h.y(), t * h.z());
      else if (u < ax + ay) q = Vec3(s * h.x(), sign * h.y(), t * h.z());
      else q = Vec3(s * h.x(), t * h.y(), sign * h.z());
      break;
    }
    case Shape::Cylinder: {
      double r = obj.dims.x(), h2 = obj.dims.y() * 0.5;
      double side = 2 * M_PI * r * obj.dims.y(), cap = M_PI * r * r;
      double u = rng.uniform() * (side + 2 * cap);
      if (u < side) {
        double th = rng.uniform(0, 2 * M_PI);
        q = Vec3(r * std::cos(th), r * std::sin(th), rng.uniform(-h2, h2));
      } else {
        double th = rng.uniform(0, 2 * M_PI), rr = r * std::sqrt(rng.uniform());
        q = Vec3(rr * std::cos(th), rr * std::sin(th), u < side + cap ? h2 : -h2);
      }
      break;
    }
  }
  return obj.position + dir_to_world(obj, q);
}

// conservative horizontal footprint radius for placement rejection
static double footprint_radius(const ObjectSpec& o) {
  switch (o.shape) {
    case Shape::Box: return 0.5 * std::hypot(o.dims.x(), o.dims.y());
    case Shape::Cylinder: return o.dims.x();
    case Shape::Sphere: return o.dims.x();
  }
  return 0.0;
}

static const Vec3 kPalette[8] = {
    Vec3(0.90, 0.20, 0.20), Vec3(0.20, 0.70, 0.25), Vec3(0.20, 0.35, 0.90),
    Vec3(0.90, 0.75, 0.15), Vec3(0.70, 0.25, 0.80), Vec3(0.15, 0.75, 0.75),
    Vec3(0.95, 0.50, 0.15), Vec3(0.55, 0.55, 0.55)};

SceneSpec generate_scene(uint64_t seed, int n_objects, const SceneGenParams& params) {
  if (n_objects < 0 || n_objects > 16)
    throw std::invalid_argument("generate_scene: n_objects must be in [0, 16]");
  SceneSpec scene;
  scene.seed = seed;
  scene.workspace_min = params.workspace_min;
  scene.workspace_max = params.workspace_max;

  Rng rng(seed);
  // oblique viewpoint sampled per scene
  double az = rng.uniform(0, 2 * M_PI);
  double el = rng.uniform(deg2rad(35), deg2rad(60));
  double radius = rng.uniform(0.55, 0.75);
  scene.camera.look_at = Vec3(0, 0, 0.04);
  scene.camera.position = scene.camera.look_at +
                          radius * Vec3(std::cos(az) * std::cos(el), std::sin(az) * std::cos(el),
                                        std::sin(el));

  double margin_x = (params.workspace_max.x() - params.workspace_min.x()) * 0.5 - 0.06;
  double margin_y = (params.workspace_max.y() - params.workspace_min.y()) * 0.5 - 0.06;
  double cx = (params.workspace_max.x() + params.workspace_min.x()) * 0.5;
  double cy = (params.workspace_max.y() + params.workspace_min.y()) * 0.5;

  int retries = 0;
  for (int i = 0; i < n_objects; ++i) {
    while (true) {
      if (retries++ > params.max_total_retries)
        throw std::runtime_error("generate_scene: object placement failed after retry budget");
      ObjectSpec o;
      double pick = rng.uniform();
      if (pick < 1.0 / 3) {
        o.shape = Shape::Box;
        o.dims = Vec3(rng.uniform(0.04, 0.08), rng.uniform(0.04, 0.08), rng.uniform(0.04, 0.10));
      } else if (pick < 2.0 / 3) {
        o.shape = Shape::Cylinder;
        o.dims = Vec3(rng.uniform(0.02, 0.04), rng.uniform(0.06, 0.12), 0);
      } else {
        o.shape = Shape::Sphere;
        o.dims = Vec3(rng.uniform(0.02, 0.038), 0, 0);
      }
      double rest_z = o.shape == Shape::Box ? o.dims.z() * 0.5
                      : o.shape == Shape::Cylinder ? o.dims.y() * 0.5
                                                   : o.dims.x();
      o.position = Vec3(cx + rng.uniform(-margin_x, margin_x),
                        cy + rng.uniform(-margin_y, margin_y), rest_z);
      o.yaw = rng.uniform(0, 2 * M_PI);
      o.instance_id = i + 1;
      o.color = kPalette[i % 8];

      bool ok = true;
      for (const auto& other : scene.objects) {
        double d = (o.position.head<2>() - other.position.head<2>()).norm();
        if (d < footprint_radius(o) + footprint_radius(other) + params.placement_margin) {
          ok = false;
          break;
        }
      }
      if (ok) {
        scene.objects.push_back(o);
        break;
      }
    }
  }
  return scene;
}

struct Hit {
  bool valid = false;
  Vec3 p, n, color;
  int instance_id = 0;
};

static Hit cast_ray(const SceneSpec& scene, const Vec3& origin, const Vec3& dir) {
  Hit hit;
  double best = 1e30;
  // table rectangle z = 0
  if (std::abs(dir.z()) > 1e-12) {
    double t = -origin.z() / dir.z();
    if (t > 1e-6 && t < best) {
      Vec3 p = origin + t * dir;
      if (std::abs(p.x()) <= scene.table_half_x && std::abs(p.y()) <= scene.table_half_y) {
        best = t;
        hit = {true, p, Vec3(0, 0, 1), Vec3(0.75, 0.73, 0.70), 0};
      }
    }
  }
  for (const auto& obj : scene.objects) {
    auto t = object_raycast(obj, origin, dir);
    if (t && *t < best) {
      best = *t;
      Vec3 p = origin + *t * dir;
      hit = {true, p, object_normal(obj, p), obj.color, obj.instance_id};
    }
  }
  return hit;
}

static Eigen::MatrixX3d normalize_coords(const Eigen::MatrixX3d& pts, const Vec3& lo,
                                         const Vec3& hi) {
  Eigen::MatrixX3d out(pts.rows(), 3);
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    for (int a = 0; a < 3; ++a)
      out(i, a) = 2.0 * (pts(i, a) - lo[a]) / (hi[a] - lo[a]) - 1.0;
  return out;
}

PointCloud render_partial_cloud(const SceneSpec& scene, int n_points, ExecMode mode) {
  if (n_points <= 0) throw std::invalid_argument("render_partial_cloud: n_points must be > 0");
  const CameraModel& cam = scene.camera;

  // camera basis: forward toward look_at, right/down per image convention
  Vec3 fwd = (cam.look_at - cam.position).normalized();
  Vec3 world_up(0, 0, 1);
  Vec3 right = fwd.cross(world_up);
  if (right.norm() < 1e-9) right = Vec3(1, 0, 0);
  right.normalize();
  Vec3 down = fwd.cross(right).normalized();

  const int n_pix = cam.width * cam.height;
  std::vector<Hit> hits(n_pix);

  auto shade = [&](int idx) {
    int u = idx % cam.width, v = idx / cam.width;
    Vec3 dir = ((u + 0.5 - cam.cx) / cam.fx) * right + ((v + 0.5 - cam.cy) / cam.fy) * down + fwd;
    hits[idx] = cast_ray(scene, cam.position, dir.normalized());
  };
  if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_pix; ++i) shade(i);
  } else {
    for (int i = 0; i < n_pix; ++i) shade(i);
  }

  std::vector<int> valid;
  valid.reserve(n_pix);
  for (int i = 0; i < n_pix; ++i)
    if (hits[i].valid) valid.push_back(i);
  if (valid.empty()) throw std::runtime_error("render_partial_cloud: camera sees no geometry");

  // select exactly n_points hit pixels, deterministic in scene.seed
  std::vector<int> sel;
  Rng rng(scene.seed ^ 0x9E3779B97F4A7C15ull);
  if (static_cast<int>(valid.size()) > n_points) {
    // partial Fisher-Yates, then restore scan order
    for (int i = 0; i < n_points; ++i) {
      size_t j = i + rng.index(valid.size() - i);
      std::swap(valid[i], valid[j]);
    }
    sel.assign(valid.begin(), valid.begin() + n_points);
    std::sort(sel.begin(), sel.end());
  } else {
    sel = valid;
    while (static_cast<int>(sel.size()) < n_points) sel.push_back(valid[rng.index(valid.size())]);
  }

  PointCloud cloud;
  int n = static_cast<int>(sel.size());
  cloud.points.resize(n, 3);
  cloud.normals.resize(n, 3);
  cloud.colors.resize(n, 3);
  cloud.instance_ids.resize(n);
  cloud.semantic.resize(n);
  cloud.has_labels = true;
  for (int i = 0; i < n; ++i) {
    const Hit& h = hits[sel[i]];
    cloud.points.row(i) = h.p.transpose();
    cloud.normals.row(i) = h.n.transpose();
    cloud.colors.row(i) = h.color.transpose();
    cloud.instance_ids[i] = h.instance_id;
    cloud.semantic[i] = h.instance_id > 0 ? 1 : 0;
  }
  cloud.normalized = normalize_coords(cloud.points, scene.workspace_min, scene.workspace_max);
  return cloud;
}

PointCloud preprocess(const PointCloud& cloud, const Vec3& lo, const Vec3& hi, int n_target,
                      uint64_t seed) {
  if (n_target <= 0) throw std::invalid_argument("preprocess: n_target must be > 0");
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    Vec3 p = cloud.points.row(i).transpose();
    if ((p.array() >= lo.array()).all() && (p.array() <= hi.array()).all())
      keep.push_back(static_cast<int>(i));
  }
  if (keep.empty()) throw std::runtime_error("preprocess: workspace crop is empty");

  Rng rng(seed ^ 0xD1B54A32D192ED03ull);
  std::vector<int> sel;
  if (static_cast<int>(keep.size()) > n_target) {
    for (int i = 0; i < n_target; ++i) {
      size_t j = i + rng.index(keep.size() - i);
      std::swap(keep[i], keep[j]);
    }
    sel.assign(keep.begin(), keep.begin() + n_target);
    std::sort(sel.begin(), sel.end());
  } else if (static_cast<int>(keep.size()) == n_target) {
    sel = keep;
  } else {
    sel = keep;
    while (static_cast<int>(sel.size()) < n_target) sel.push_back(keep[rng.index(keep.size())]);
  }

  PointCloud out;
  int n = static_cast<int>(sel.size());
  out.points.resize(n, 3);
  out.normals.resize(n, 3);
  out.colors.resize(n, 3);
  out.has_labels = cloud.has_labels;
  if (cloud.has_labels) {
    out.instance_ids.resize(n);
    out.semantic.resize(n);
  }
  for (int i = 0; i < n; ++i) {
    out.points.row(i) = cloud.points.row(sel[i]);
    out.normals.row(i) = cloud.normals.row(sel[i]);
    out.colors.row(i) = cloud.colors.row(sel[i]);
    if (cloud.has_labels) {
      out.instance_ids[i] = cloud.instance_ids[sel[i]];
      out.semantic[i] = cloud.semantic[sel[i]];
    }
  }
  out.normalized = normalize_coords(out.points, lo, hi);
  return out;
}

PointCloud sample_scene_cloud(const SceneSpec& scene, int points_per_object, int table_points,
                              uint64_t seed) {
  if (points_per_object < 1 || table_points < 0)
    throw std::invalid_argument("sample_scene_cloud: bad sample counts");
  Rng rng(seed ^ 0x8F14E45FCEEA167Aull);

  const int n = static_cast<int>(scene.objects.size()) * points_per_object + table_points;
  if (n == 0) throw std::runtime_error("sample_scene_cloud: empty scene and no table points");
  PointCloud cloud;
  cloud.points.resize(n, 3);
  cloud.normals.resize(n, 3);
  cloud.colors.resize(n, 3);
  cloud.instance_ids.resize(n);
  cloud.semantic.resize(n);
  cloud.has_labels = true;

  int at = 0;
  for (const ObjectSpec& obj : scene.objects) {
    for (int i = 0; i < points_per_object; ++i, ++at) {
      Vec3 p = object_surface_sample(obj, rng);
      cloud.points.row(at) = p.transpose();
      cloud.normals.row(at) = object_normal(obj, p).transpose();
      cloud.colors.row(at) = obj.color.transpose();
      cloud.instance_ids[at] = obj.instance_id;
      cloud.semantic[at] = 1;
    }
  }
  double tx = std::min(scene.table_half_x, std::abs(scene.workspace_max.x()));
  double ty = std::min(scene.table_half_y, std::abs(scene.workspace_max.y()));
  for (int i = 0; i < table_points; ++i, ++at) {
    cloud.points.row(at) << rng.uniform(-tx, tx), rng.uniform(-ty, ty), 0.0;
    cloud.normals.row(at) << 0, 0, 1;
    cloud.colors.row(at) << 0.75, 0.73, 0.70;
    cloud.instance_ids[at] = 0;
    cloud.semantic[at] = 0;
  }
  cloud.normalized = normalize_coords(cloud.points, scene.workspace_min, scene.workspace_max);
  return cloud;
}

}  // namespace graspmt
