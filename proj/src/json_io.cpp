#include "graspmt/json_io.hpp"

#include <fstream>

#include "json.hpp"

namespace graspmt {

using nlohmann::json;

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("json: expected 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("json: cannot open " + path);
  json j;
  is >> j;
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("json: cannot open for writing " + path);
  os << j.dump(2) << "\n";
  if (!os) throw std::runtime_error("json: write failed " + path);
}

}  // namespace

void save_scene_spec(const SceneSpec& scene, const std::string& path) {
  json j;
  j["seed"] = scene.seed;
  j["table_half_x"] = scene.table_half_x;
  j["table_half_y"] = scene.table_half_y;
  j["workspace_min"] = vec3_to_json(scene.workspace_min);
  j["workspace_max"] = vec3_to_json(scene.workspace_max);
  json cam;
  cam["position"] = vec3_to_json(scene.camera.position);
  cam["look_at"] = vec3_to_json(scene.camera.look_at);
  cam["fx"] = scene.camera.fx;
  cam["fy"] = scene.camera.fy;
  cam["cx"] = scene.camera.cx;
  cam["cy"] = scene.camera.cy;
  cam["width"] = scene.camera.width;
  cam["height"] = scene.camera.height;
  j["camera"] = cam;
  j["objects"] = json::array();
  for (const ObjectSpec& o : scene.objects) {
    json jo;
    jo["shape"] = shape_name(o.shape);
    jo["dims"] = vec3_to_json(o.dims);
    jo["position"] = vec3_to_json(o.position);
    jo["yaw"] = o.yaw;
    jo["instance_id"] = o.instance_id;
    jo["color"] = vec3_to_json(o.color);
    j["objects"].push_back(jo);
  }
  write_json_file(j, path);
}

SceneSpec load_scene_spec(const std::string& path) {
  json j = read_json_file(path);
  SceneSpec scene;
  scene.seed = j.at("seed").get<uint64_t>();
  scene.table_half_x = j.at("table_half_x").get<double>();
  scene.table_half_y = j.at("table_half_y").get<double>();
  scene.workspace_min = vec3_from_json(j.at("workspace_min"));
  scene.workspace_max = vec3_from_json(j.at("workspace_max"));
  const json& cam = j.at("camera");
  scene.camera.position = vec3_from_json(cam.at("position"));
  scene.camera.look_at = vec3_from_json(cam.at("look_at"));
  scene.camera.fx = cam.at("fx").get<double>();
  scene.camera.fy = cam.at("fy").get<double>();
  scene.camera.cx = cam.at("cx").get<double>();
  scene.camera.cy = cam.at("cy").get<double>();
  scene.camera.width = cam.at("width").get<int>();
  scene.camera.height = cam.at("height").get<int>();
  for (const json& jo : j.at("objects")) {
    ObjectSpec o;
    o.shape = shape_from_name(jo.at("shape").get<std::string>());
    o.dims = vec3_from_json(jo.at("dims"));
    o.position = vec3_from_json(jo.at("position"));
    o.yaw = jo.at("yaw").get<double>();
    o.instance_id = jo.at("instance_id").get<int>();
    o.color = vec3_from_json(jo.at("color"));
    scene.objects.push_back(o);
  }
  return scene;
}

void save_grasps(const std::vector<Grasp>& grasps, const std::string& path) {
  json j = json::array();
  for (const Grasp& g : grasps) {
    json jg;
    jg["t"] = vec3_to_json(g.center);
    jg["v_A"] = vec3_to_json(g.approach);
    jg["v_C"] = vec3_to_json(g.closing);
    jg["width"] = g.width;
    jg["depth"] = g.depth;
    jg["score"] = g.score;
    jg["instance_id"] = g.instance_id;
    j.push_back(jg);
  }
  write_json_file(j, path);
}

std::vector<Grasp> load_grasps(const std::string& path) {
  json j = read_json_file(path);
  if (!j.is_array()) throw std::runtime_error("load_grasps: expected JSON array in " + path);
  std::vector<Grasp> grasps;
  for (const json& jg : j) {
    Grasp g;
    g.center = vec3_from_json(jg.at("t"));
    g.approach = vec3_from_json(jg.at("v_A"));
    g.closing = vec3_from_json(jg.at("v_C"));
    g.width = jg.at("width").get<double>();
    g.depth = jg.at("depth").get<double>();
    g.score = jg.at("score").get<double>();
    g.instance_id = jg.at("instance_id").get<int>();
    grasps.push_back(g);
  }
  return grasps;
}

void save_labels(const SceneLabels& labels, const std::string& path) {
  json j;
  json jg = json::array();
  for (const Grasp& g : labels.grasps) {
    json e;
    e["t"] = vec3_to_json(g.center);
    e["v_A"] = vec3_to_json(g.approach);
    e["v_C"] = vec3_to_json(g.closing);
    e["width"] = g.width;
    e["depth"] = g.depth;
    e["score"] = g.score;
    e["instance_id"] = g.instance_id;
    jg.push_back(e);
  }
  j["grasps"] = jg;
  j["grasp_index"] = labels.grasp_index;
  j["graspable"] = json::array();
  for (uint8_t v : labels.graspable) j["graspable"].push_back(static_cast<int>(v));
  j["ignore"] = json::array();
  for (uint8_t v : labels.ignore) j["ignore"].push_back(static_cast<int>(v));
  j["coll_valid"] = json::array();
  for (uint8_t v : labels.coll_valid) j["coll_valid"].push_back(static_cast<int>(v));
  j["coll_label"] = labels.coll_label;
  write_json_file(j, path);
}

SceneLabels load_labels(const std::string& path) {
  json j = read_json_file(path);
  SceneLabels labels;
  for (const json& e : j.at("grasps")) {
    Grasp g;
    g.center = vec3_from_json(e.at("t"));
    g.approach = vec3_from_json(e.at("v_A"));
    g.closing = vec3_from_json(e.at("v_C"));
    g.width = e.at("width").get<double>();
    g.depth = e.at("depth").get<double>();
    g.score = e.at("score").get<double>();
    g.instance_id = e.at("instance_id").get<int>();
    labels.grasps.push_back(g);
  }
  labels.grasp_index = j.at("grasp_index").get<std::vector<int>>();
  for (const json& v : j.at("graspable")) labels.graspable.push_back(v.get<int>());
  for (const json& v : j.at("ignore")) labels.ignore.push_back(v.get<int>());
  for (const json& v : j.at("coll_valid")) labels.coll_valid.push_back(v.get<int>());
  labels.coll_label = j.at("coll_label").get<std::vector<int>>();
  const size_t n = labels.grasp_index.size();
  if (labels.graspable.size() != n || labels.ignore.size() != n ||
      labels.coll_valid.size() != n || labels.coll_label.size() != n)
    throw std::runtime_error("load_labels: inconsistent array lengths in " + path);
  return labels;
}

}  // namespace graspmt
