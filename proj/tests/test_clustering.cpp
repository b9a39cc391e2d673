#include <algorithm>
#include <map>

#include "doctest.h"
#include "graspmt/clustering.hpp"

using namespace graspmt;

namespace {

// canonical cluster signature: partition of row indices, order-independent
std::vector<std::vector<int>> partition_of(const std::vector<int>& ids) {
  std::map<int, std::vector<int>> groups;
  for (size_t i = 0; i < ids.size(); ++i) groups[ids[i]].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> out;
  for (auto& [id, rows] : groups) out.push_back(rows);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("meanshift two well-separated blobs") {
  Rng rng(5);
  Eigen::MatrixXd x(60, 2);
  for (int i = 0; i < 30; ++i) x.row(i) << rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3);
  for (int i = 30; i < 60; ++i)
    x.row(i) << 5.0 + rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3);

  ClusterResult res = meanshift(x, 1.5);
  REQUIRE(res.modes.rows() == 2);
  REQUIRE(static_cast<int>(res.instance_ids.size()) == 60);
  for (int i = 1; i < 30; ++i) CHECK(res.instance_ids[i] == res.instance_ids[0]);
  for (int i = 31; i < 60; ++i) CHECK(res.instance_ids[i] == res.instance_ids[30]);
  CHECK(res.instance_ids[0] != res.instance_ids[30]);
  // ids are contiguous from 1
  CHECK(std::min(res.instance_ids[0], res.instance_ids[30]) == 1);
  CHECK(std::max(res.instance_ids[0], res.instance_ids[30]) == 2);
  // modes land near the blob means
  double m0 = std::min(res.modes(0, 0), res.modes(1, 0));
  double m1 = std::max(res.modes(0, 0), res.modes(1, 0));
  CHECK(std::abs(m0 - 0.0) < 0.3);
  CHECK(std::abs(m1 - 5.0) < 0.3);
}

TEST_CASE("meanshift identical points collapse to one cluster") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(40, 3) * 2.5;
  ClusterResult res = meanshift(x, 1.5);
  REQUIRE(res.modes.rows() == 1);
  for (int id : res.instance_ids) CHECK(id == 1);
  CHECK((res.modes.row(0) - x.row(0)).norm() < 1e-12);
}

TEST_CASE("meanshift row-order invariance") {
  Rng rng(9);
  Eigen::MatrixXd x(90, 4);
  for (int i = 0; i < 90; ++i) {
    Vec3 c = Vec3::Zero();
    c.x() = 4.0 * (i % 3);
    x.row(i) << c.x() + rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25),
        rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25);
  }
  std::vector<int> perm(90);
  for (int i = 0; i < 90; ++i) perm[i] = i;
  Rng shuffle_rng(17);
  for (int i = 0; i < 89; ++i)
    std::swap(perm[i], perm[i + static_cast<int>(shuffle_rng.index(90 - i))]);
  Eigen::MatrixXd shuffled(90, 4);
  for (int i = 0; i < 90; ++i) shuffled.row(i) = x.row(perm[i]);

  ClusterResult a = meanshift(x, 1.5);
  ClusterResult b = meanshift(shuffled, 1.5);
  // undo the permutation on b's assignment, then compare partitions
  std::vector<int> b_unshuffled(90);
  for (int i = 0; i < 90; ++i) b_unshuffled[perm[i]] = b.instance_ids[i];
  CHECK(partition_of(a.instance_ids) == partition_of(b_unshuffled));
  CHECK(a.modes.rows() == 3);
  CHECK(b.modes.rows() == 3);
}

TEST_CASE("meanshift serial matches parallel") {
  Rng rng(31);
  Eigen::MatrixXd x(200, 5);
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 5; ++j) x(i, j) = 3.0 * (i % 4 == j) + rng.uniform(-0.3, 0.3);
  ClusterResult a = meanshift(x, 1.5, 100, 1e-4, ExecMode::Parallel);
  ClusterResult b = meanshift(x, 1.5, 100, 1e-4, ExecMode::Serial);
  CHECK(a.instance_ids == b.instance_ids);
  CHECK(a.modes == b.modes);
}

TEST_CASE("meanshift margin configurations recovered exactly") {
  // compact clusters (spread << bandwidth) separated by > 2 * bandwidth:
  // recovery must be exact for any instance count
  for (int n_clusters = 2; n_clusters <= 8; ++n_clusters) {
    Rng rng(100 + n_clusters);
    int per = 25;
    Eigen::MatrixXd x(per * n_clusters, 3);
    std::vector<int> truth(per * n_clusters);
    for (int c = 0; c < n_clusters; ++c) {
      Vec3 center(6.0 * c, 3.0 * (c % 2), 0.0);
      for (int i = 0; i < per; ++i) {
        int row = c * per + i;
        x.row(row) = (center + 0.2 * rng.unit_vector()).transpose();
        truth[row] = c;
      }
    }
    ClusterResult res = meanshift(x, 1.5);
    REQUIRE(res.modes.rows() == n_clusters);
    CHECK(partition_of(res.instance_ids) == partition_of(truth));
  }
}

TEST_CASE("meanshift input validation") {
  CHECK_THROWS(meanshift(Eigen::MatrixXd(0, 3), 1.5));
  Eigen::MatrixXd one(1, 3);
  one << 1, 2, 3;
  CHECK_THROWS(meanshift(one, 0.0));
  ClusterResult res = meanshift(one, 1.5);
  CHECK(res.instance_ids == std::vector<int>{1});
}
