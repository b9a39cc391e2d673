#include <cmath>

#include "doctest.h"
#include "graspmt/json_io.hpp"
#include "graspmt/scene.hpp"

using namespace graspmt;

TEST_CASE("generate_scene determinism and bounds") {
  SceneSpec a = generate_scene(7, 5);
  SceneSpec b = generate_scene(7, 5);
  REQUIRE(a.objects.size() == 5);
  for (size_t i = 0; i < 5; ++i) {
    CHECK(a.objects[i].position == b.objects[i].position);
    CHECK(a.objects[i].dims == b.objects[i].dims);
    CHECK(a.objects[i].yaw == b.objects[i].yaw);
    CHECK(a.objects[i].instance_id == static_cast<int>(i) + 1);
    CHECK(a.objects[i].position.z() >= 0.0);
  }
  CHECK(a.camera.position == b.camera.position);

  SceneSpec empty = generate_scene(7, 0);
  CHECK(empty.objects.empty());
  CHECK_THROWS(generate_scene(7, 17));
}

TEST_CASE("generate_scene objects do not interpenetrate") {
  SceneSpec scene = generate_scene(7, 5);
  Rng rng(99);
  // surface-sample oracle: min pairwise distance between object surfaces >= 0
  for (size_t i = 0; i < scene.objects.size(); ++i)
    for (size_t j = i + 1; j < scene.objects.size(); ++j)
      for (int s = 0; s < 2000; ++s) {
        Vec3 p = object_surface_sample(scene.objects[i], rng);
        CHECK(object_sdf(scene.objects[j], p) >= 0.0);
      }
}

TEST_CASE("render_partial_cloud labels and visibility") {
  SceneSpec scene = generate_scene(3, 1);
  PointCloud cloud = render_partial_cloud(scene, 4096);
  REQUIRE(cloud.size() == 4096);
  int fg = 0;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    CHECK(std::abs(cloud.normals.row(i).norm() - 1.0) < 1e-6);
    if (cloud.semantic[i]) {
      ++fg;
      CHECK(cloud.instance_ids[i] == 1);
      // on-surface within tolerance
      CHECK(std::abs(object_sdf(scene.objects[0], cloud.points.row(i).transpose())) < 1e-6);
      // only camera-facing surfaces are sampled
      Vec3 view = (cloud.points.row(i).transpose() - scene.camera.position).normalized();
      CHECK(cloud.normals.row(i).dot(view) < 1e-9);
    } else {
      CHECK(cloud.instance_ids[i] == 0);
      CHECK(std::abs(cloud.points(i, 2)) < 1e-12);
    }
  }
  CHECK(fg > 0);
}

TEST_CASE("render_partial_cloud occlusion") {
  // small sphere fully hidden behind a tall box from the camera's side
  SceneSpec scene;
  scene.seed = 1;
  scene.camera.position = Vec3(0.6, 0, 0.1);
  scene.camera.look_at = Vec3(0, 0, 0.05);
  ObjectSpec box;
  box.shape = Shape::Box;
  box.dims = Vec3(0.02, 0.3, 0.3);
  box.position = Vec3(0.1, 0, 0.15);
  box.instance_id = 1;
  ObjectSpec sphere;
  sphere.shape = Shape::Sphere;
  sphere.dims = Vec3(0.02, 0, 0);
  sphere.position = Vec3(-0.05, 0, 0.02);
  sphere.instance_id = 2;
  scene.objects = {box, sphere};
  PointCloud cloud = render_partial_cloud(scene, 2000);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) CHECK(cloud.instance_ids[i] != 2);
}

TEST_CASE("render determinism across exec modes") {
  SceneSpec scene = generate_scene(5, 3);
  PointCloud a = render_partial_cloud(scene, 2048, ExecMode::Parallel);
  PointCloud b = render_partial_cloud(scene, 2048, ExecMode::Serial);
  CHECK(a.points == b.points);
  CHECK(a.normals == b.normals);
  CHECK(a.instance_ids == b.instance_ids);
}

TEST_CASE("preprocess contract") {
  SceneSpec scene = generate_scene(5, 3);
  PointCloud raw = render_partial_cloud(scene, 10000);
  PointCloud out = preprocess(raw, scene.workspace_min, scene.workspace_max, 2048, 3);
  REQUIRE(out.size() == 2048);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      CHECK(out.points(i, a) >= scene.workspace_min[a]);
      CHECK(out.points(i, a) <= scene.workspace_max[a]);
      CHECK(out.normalized(i, a) >= -1.0 - 1e-12);
      CHECK(out.normalized(i, a) <= 1.0 + 1e-12);
    }
  }

  // workspace corner normalizes to (-1,-1,-1)
  PointCloud corner;
  corner.points = scene.workspace_min.transpose();
  corner.normals = Vec3(0, 0, 1).transpose();
  corner.colors = Vec3(0, 0, 0).transpose();
  corner.normalized = corner.points;
  PointCloud anchored = preprocess(corner, scene.workspace_min, scene.workspace_max, 1);
  CHECK(anchored.normalized.row(0) == Eigen::RowVector3d(-1, -1, -1));

  // empty crop throws
  CHECK_THROWS(preprocess(corner, Vec3(1, 1, 1), Vec3(2, 2, 2), 1));
}

TEST_CASE("point labels match nearest-surface oracle") {
  SceneSpec scene = generate_scene(9, 3);
  PointCloud cloud = render_partial_cloud(scene, 4096);
  int agree = 0;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    Vec3 p = cloud.points.row(i).transpose();
    int best = 0;
    double best_d = std::abs(p.z());  // table distance
    for (const auto& obj : scene.objects) {
      double d = std::abs(object_sdf(obj, p));
      if (d < best_d) {
        best_d = d;
        best = obj.instance_id;
      }
    }
    agree += (best == cloud.instance_ids[i]);
  }
  CHECK(static_cast<double>(agree) / cloud.size() >= 0.999);
}

TEST_CASE("sample_scene_cloud is a labeled on-surface cloud") {
  SceneSpec scene = generate_scene(4, 3);
  PointCloud dense = sample_scene_cloud(scene, 500, 1000, scene.seed);
  REQUIRE(dense.size() == 3 * 500 + 1000);
  for (Eigen::Index i = 0; i < dense.size(); ++i) {
    if (dense.semantic[i]) {
      const ObjectSpec& obj = scene.objects[dense.instance_ids[i] - 1];
      CHECK(std::abs(object_sdf(obj, dense.points.row(i).transpose())) < 1e-9);
    } else {
      CHECK(dense.points(i, 2) == 0.0);
    }
  }
  PointCloud again = sample_scene_cloud(scene, 500, 1000, scene.seed);
  CHECK(dense.points == again.points);
}

TEST_CASE("scene spec JSON round trip") {
  SceneSpec scene = generate_scene(42, 4);
  std::string path = "/tmp/graspmt_scene_rt.json";
  save_scene_spec(scene, path);
  SceneSpec back = load_scene_spec(path);
  CHECK(back.seed == scene.seed);
  REQUIRE(back.objects.size() == scene.objects.size());
  for (size_t i = 0; i < scene.objects.size(); ++i) {
    CHECK(back.objects[i].position == scene.objects[i].position);
    CHECK(back.objects[i].dims == scene.objects[i].dims);
    CHECK(back.objects[i].yaw == scene.objects[i].yaw);
    CHECK(back.objects[i].shape == scene.objects[i].shape);
  }
  CHECK(back.camera.position == scene.camera.position);
}
