#include <cstring>
#include <fstream>

#include "doctest.h"
#include "graspmt/config.hpp"
#include "graspmt/json_io.hpp"
#include "graspmt/ply_io.hpp"

using namespace graspmt;

TEST_CASE("ply round trip is bit exact") {
  SceneSpec scene = generate_scene(23, 3);
  PointCloud cloud = preprocess(render_partial_cloud(scene, 4096), scene.workspace_min,
                                scene.workspace_max, 1024, 23);
  std::string path = "/tmp/graspmt_rt.ply";
  save_ply(cloud, path);
  PointCloud back = load_ply(path);
  REQUIRE(back.size() == cloud.size());
  CHECK(std::memcmp(back.points.data(), cloud.points.data(),
                    sizeof(double) * cloud.points.size()) == 0);
  CHECK(std::memcmp(back.normals.data(), cloud.normals.data(),
                    sizeof(double) * cloud.normals.size()) == 0);
  CHECK(std::memcmp(back.colors.data(), cloud.colors.data(),
                    sizeof(double) * cloud.colors.size()) == 0);
  CHECK(std::memcmp(back.normalized.data(), cloud.normalized.data(),
                    sizeof(double) * cloud.normalized.size()) == 0);
  CHECK(back.instance_ids == cloud.instance_ids);
  CHECK(back.semantic == cloud.semantic);
  CHECK(back.has_labels);
}

TEST_CASE("ply rejects malformed input") {
  CHECK_THROWS(load_ply("/tmp/graspmt_does_not_exist.ply"));
  std::string path = "/tmp/graspmt_bad.ply";
  {
    std::ofstream os(path);
    os << "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n0\n";
  }
  CHECK_THROWS(load_ply(path));
}

TEST_CASE("grasp list json round trip") {
  GripperModel gr;
  std::vector<Grasp> grasps;
  Rng rng(29);
  for (int i = 0; i < 20; ++i) {
    Vec3 a = rng.unit_vector(), c = rng.unit_vector();
    while (std::abs(a.dot(c)) > 0.95) c = rng.unit_vector();
    grasps.push_back(make_grasp(Vec3(rng.uniform(), rng.uniform(), rng.uniform()), a, c,
                                rng.uniform(0, 0.08), rng.uniform(0, 0.03), rng.uniform(), gr,
                                1 + static_cast<int>(rng.index(5))));
  }
  std::string path = "/tmp/graspmt_grasps.json";
  save_grasps(grasps, path);
  std::vector<Grasp> back = load_grasps(path);
  REQUIRE(back.size() == grasps.size());
  for (size_t i = 0; i < grasps.size(); ++i) {
    CHECK(back[i].center == grasps[i].center);
    CHECK(back[i].approach == grasps[i].approach);
    CHECK(back[i].closing == grasps[i].closing);
    CHECK(back[i].width == grasps[i].width);
    CHECK(back[i].depth == grasps[i].depth);
    CHECK(back[i].score == grasps[i].score);
    CHECK(back[i].instance_id == grasps[i].instance_id);
  }
}

TEST_CASE("labels json round trip and length validation") {
  GripperModel gr;
  SceneLabels labels;
  labels.grasps = {make_grasp(Vec3(0, 0, 0.05), Vec3(0, 0, -1), Vec3(1, 0, 0), 0.04, 0.02, 0.9,
                              gr, 1)};
  labels.grasp_index = {0, -1, -1};
  labels.graspable = {1, 0, 0};
  labels.ignore = {0, 1, 0};
  labels.coll_valid = {1, 0, 1};
  labels.coll_label = {1, 0, 0};
  std::string path = "/tmp/graspmt_labels.json";
  save_labels(labels, path);
  SceneLabels back = load_labels(path);
  CHECK(back.grasp_index == labels.grasp_index);
  CHECK(back.graspable == labels.graspable);
  CHECK(back.ignore == labels.ignore);
  CHECK(back.coll_valid == labels.coll_valid);
  CHECK(back.coll_label == labels.coll_label);
  REQUIRE(back.grasps.size() == 1);
  CHECK(back.grasps[0].center == labels.grasps[0].center);

  // mismatched per-point array lengths are rejected on load
  SceneLabels bad = labels;
  bad.graspable.pop_back();
  save_labels(bad, path);
  CHECK_THROWS(load_labels(path));
}

TEST_CASE("run config parsing") {
  RunConfig cfg;
  apply_config_line(cfg, "train.lr = 0.025");
  CHECK(cfg.train.lr == 0.025);
  apply_config_line(cfg, "scene.points = 1024");
  CHECK(cfg.scene_points == 1024);
  apply_config_line(cfg, "infer.use_collision_head = false");
  CHECK(!cfg.use_collision_head);
  apply_config_line(cfg, "  # a comment");
  apply_config_line(cfg, "");

  CHECK_THROWS_WITH_AS(apply_config_line(cfg, "no.such.key = 1"),
                       doctest::Contains("no.such.key"), std::runtime_error);
  CHECK_THROWS(apply_config_line(cfg, "train.lr 0.1"));
  CHECK_THROWS(apply_config_line(cfg, "train.epochs = banana"));
}

TEST_CASE("run config echo re-parses to the same state") {
  RunConfig cfg;
  cfg.train.lr = 0.0125;
  cfg.train.epochs = 17;
  cfg.gripper.max_width = 0.1;
  cfg.nms.epsilon_r = 25.0;
  cfg.use_collision_head = false;
  cfg.sampler.depths = {0.01, 0.02, 0.03};
  std::string path = "/tmp/graspmt_cfg.txt";
  save_run_config(cfg, path);
  RunConfig back = load_run_config(path);
  CHECK(back.train.lr == cfg.train.lr);
  CHECK(back.train.epochs == cfg.train.epochs);
  CHECK(back.gripper.max_width == cfg.gripper.max_width);
  CHECK(back.nms.epsilon_r == cfg.nms.epsilon_r);
  CHECK(back.use_collision_head == cfg.use_collision_head);
  CHECK(back.sampler.depths == cfg.sampler.depths);
  // canonical echo is a fixed point
  CHECK(dump_run_config(back) == dump_run_config(cfg));

  RunConfig invalid;
  invalid.scene_points = 0;
  CHECK_THROWS(invalid.validate());
}
