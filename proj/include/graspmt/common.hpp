#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace graspmt {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Deterministic RNG. Only the raw mt19937_64 bit stream is consumed, so the
/// produced sequences are identical across standard library implementations.
class Rng {
public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  size_t index(size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: n == 0");
    return static_cast<size_t>(uniform() * static_cast<double>(n)) % n;
  }

  double normal() {
    // Box-Muller, one value per call
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Vec3 unit_vector() {
    while (true) {
      Vec3 v(normal(), normal(), normal());
      double n = v.norm();
      if (n > 1e-9) return v / n;
    }
  }

  uint64_t raw() { return eng_(); }

private:
  std::mt19937_64 eng_;
};

/// Uniform hash grid over a fixed point set for box / radius queries.
/// Candidate lists are returned in ascending point-index order so that
/// downstream reductions are order-deterministic.
class SpatialGrid {
public:
  SpatialGrid() = default;

  SpatialGrid(const Eigen::MatrixX3d& points, double cell) { build(points, cell); }

  void build(const Eigen::MatrixX3d& points, double cell) {
    if (cell <= 0.0) throw std::invalid_argument("SpatialGrid: cell size must be > 0");
    points_ = points;
    cell_ = cell;
    cells_.clear();
    for (Eigen::Index i = 0; i < points.rows(); ++i)
      cells_[key(points.row(i).transpose())].push_back(static_cast<int>(i));
  }

  const Eigen::MatrixX3d& points() const { return points_; }
  bool empty() const { return points_.rows() == 0; }

  /// Indices of all points inside the axis-aligned box [lo, hi], ascending.
  std::vector<int> query_box(const Vec3& lo, const Vec3& hi) const {
    std::vector<int> out;
    Eigen::Vector3i clo = coord(lo), chi = coord(hi);
    for (int x = clo.x(); x <= chi.x(); ++x)
      for (int y = clo.y(); y <= chi.y(); ++y)
        for (int z = clo.z(); z <= chi.z(); ++z) {
          auto it = cells_.find(pack(x, y, z));
          if (it == cells_.end()) continue;
          for (int i : it->second) {
            Vec3 p = points_.row(i).transpose();
            if ((p.array() >= lo.array()).all() && (p.array() <= hi.array()).all())
              out.push_back(i);
          }
        }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<int> radius_neighbors(const Vec3& center, double radius) const {
    std::vector<int> out;
    Vec3 r(radius, radius, radius);
    Eigen::Vector3i clo = coord(center - r), chi = coord(center + r);
    double r2 = radius * radius;
    for (int x = clo.x(); x <= chi.x(); ++x)
      for (int y = clo.y(); y <= chi.y(); ++y)
        for (int z = clo.z(); z <= chi.z(); ++z) {
          auto it = cells_.find(pack(x, y, z));
          if (it == cells_.end()) continue;
          for (int i : it->second)
            if ((points_.row(i).transpose() - center).squaredNorm() <= r2) out.push_back(i);
        }
    std::sort(out.begin(), out.end());
    return out;
  }

private:
  Eigen::Vector3i coord(const Vec3& p) const {
    return Eigen::Vector3i(static_cast<int>(std::floor(p.x() / cell_)),
                           static_cast<int>(std::floor(p.y() / cell_)),
                           static_cast<int>(std::floor(p.z() / cell_)));
  }
  static int64_t pack(int x, int y, int z) {
    return (static_cast<int64_t>(x) & 0x1FFFFF) | ((static_cast<int64_t>(y) & 0x1FFFFF) << 21) |
           ((static_cast<int64_t>(z) & 0x1FFFFF) << 42);
  }
  int64_t key(const Vec3& p) const {
    Eigen::Vector3i c = coord(p);
    return pack(c.x(), c.y(), c.z());
  }

  Eigen::MatrixX3d points_;
  double cell_ = 1.0;
  std::unordered_map<int64_t, std::vector<int>> cells_;
};

enum class ExecMode { Serial, Parallel };

inline double deg2rad(double d) { return d * M_PI / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / M_PI; }

}  // namespace graspmt
