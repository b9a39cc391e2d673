#include "doctest.h"
#include "graspmt/nms.hpp"

using namespace graspmt;

namespace {

GripperModel gr;

Grasp g(const Vec3& t, double yaw_deg, double score, int instance) {
  double y = yaw_deg * M_PI / 180.0;
  // approach fixed straight down, closing rotated about the approach axis
  Vec3 closing(std::cos(y), std::sin(y), 0);
  return make_grasp(t, Vec3(0, 0, -1), closing, 0.04, 0.02, score, gr, instance);
}

Prediction pred(std::initializer_list<Grasp> grasps) {
  Prediction p;
  for (const Grasp& x : grasps) {
    p.grasps.push_back(x);
    p.instance_ids.push_back(x.instance_id);
    p.collision_free.push_back(1);
  }
  return p;
}

}  // namespace

TEST_CASE("nms suppresses near-duplicates within an instance") {
  // 5 mm and 10 deg away from the winner: inside (10 mm, 30 deg) -> suppressed
  Prediction p = pred({g(Vec3(0, 0, 0.05), 0, 0.9, 1),
                       g(Vec3(0.005, 0, 0.05), 10, 0.8, 1),
                       g(Vec3(0.1, 0, 0.05), 0, 0.7, 1)});
  std::vector<Grasp> kept = instance_pose_nms(p);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].score == 0.9);
  CHECK(kept[1].score == 0.7);
}

TEST_CASE("nms keeps boundary-distance grasps") {
  // suppression needs both components strictly under epsilon
  Prediction p = pred({g(Vec3(0, 0, 0.05), 0, 0.9, 1),
                       g(Vec3(0.0100000001, 0, 0.05), 0, 0.8, 1),  // at eps_t
                       g(Vec3(0, 0, 0.05), 30.0000001, 0.7, 1),    // at eps_r
                       g(Vec3(0.0099, 0, 0.05), 29.99, 0.6, 1)});  // inside both
  std::vector<Grasp> kept = instance_pose_nms(p);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].score == 0.9);
  CHECK(kept[1].score == 0.8);
  CHECK(kept[2].score == 0.7);
}

TEST_CASE("nms separates instances") {
  // identical poses on different instances never suppress each other
  Prediction p = pred({g(Vec3(0, 0, 0.05), 0, 0.9, 1), g(Vec3(0, 0, 0.05), 0, 0.8, 2)});
  std::vector<Grasp> kept = instance_pose_nms(p);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].instance_id == 1);
  CHECK(kept[1].instance_id == 2);
}

TEST_CASE("nms drops colliding grasps first") {
  Prediction p = pred({g(Vec3(0, 0, 0.05), 0, 0.9, 1), g(Vec3(0.1, 0, 0.05), 0, 0.8, 1)});
  p.collision_free[0] = 0;
  std::vector<Grasp> kept = instance_pose_nms(p);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == 0.8);
}

TEST_CASE("nms disjunction and keep-cap options") {
  NmsConfig cfg;
  cfg.conjunction = false;
  // close in translation only: suppressed under disjunction, kept under conjunction
  Prediction p = pred({g(Vec3(0, 0, 0.05), 0, 0.9, 1), g(Vec3(0.005, 0, 0.05), 90, 0.8, 1)});
  CHECK(instance_pose_nms(p).size() == 2);
  CHECK(instance_pose_nms(p, cfg).size() == 1);

  NmsConfig cap;
  cap.max_keep_per_instance = 1;
  Prediction q = pred({g(Vec3(0, 0, 0.05), 0, 0.9, 1), g(Vec3(0.1, 0, 0.05), 0, 0.8, 1),
                       g(Vec3(-0.1, 0, 0.05), 0, 0.7, 2)});
  std::vector<Grasp> kept = instance_pose_nms(q, cap);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].score == 0.9);
  CHECK(kept[1].score == 0.7);
}

TEST_CASE("nms output ordering") {
  Prediction p = pred({g(Vec3(0.1, 0, 0.05), 0, 0.5, 2), g(Vec3(0, 0, 0.05), 0, 0.9, 1),
                       g(Vec3(-0.1, 0, 0.05), 0, 0.5, 1)});
  std::vector<Grasp> kept = instance_pose_nms(p);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].score == 0.9);
  // tie on score: lower instance id first
  CHECK(kept[1].instance_id == 1);
  CHECK(kept[2].instance_id == 2);
}

TEST_CASE("nms matches the reference transcription on random fixtures") {
  for (int fixture = 0; fixture < 100; ++fixture) {
    Rng rng(5000 + fixture);
    int n = 5 + static_cast<int>(rng.index(60));
    Prediction p;
    for (int i = 0; i < n; ++i) {
      Vec3 t(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(0.02, 0.1));
      Vec3 approach = rng.unit_vector();
      Vec3 closing = rng.unit_vector();
      while (std::abs(approach.dot(closing)) > 0.95) closing = rng.unit_vector();
      Grasp x = make_grasp(t, approach, closing, rng.uniform(0, 0.08),
                           rng.uniform(0, 0.03), rng.uniform(0, 1), gr,
                           1 + static_cast<int>(rng.index(4)));
      p.grasps.push_back(x);
      p.instance_ids.push_back(x.instance_id);
      p.collision_free.push_back(rng.uniform() < 0.8 ? 1 : 0);
    }
    std::vector<Grasp> a = instance_pose_nms(p);
    std::vector<Grasp> b = instance_pose_nms_reference(p);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].center == b[i].center);
      CHECK(a[i].approach == b[i].approach);
      CHECK(a[i].closing == b[i].closing);
      CHECK(a[i].score == b[i].score);
      CHECK(a[i].instance_id == b[i].instance_id);
    }
  }
}

TEST_CASE("nms empty and degenerate inputs") {
  Prediction empty;
  CHECK(instance_pose_nms(empty).empty());

  Prediction all_colliding = pred({g(Vec3(0, 0, 0.05), 0, 0.9, 1)});
  all_colliding.collision_free[0] = 0;
  CHECK(instance_pose_nms(all_colliding).empty());

  Prediction bad = pred({g(Vec3(0, 0, 0.05), 0, 0.9, 1)});
  bad.collision_free.clear();
  CHECK_THROWS(instance_pose_nms(bad));
}
