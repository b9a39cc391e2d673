// Pipeline driver: gen -> label -> train -> infer -> eval.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "graspmt/collision.hpp"
#include "graspmt/config.hpp"
#include "graspmt/eval.hpp"
#include "graspmt/json_io.hpp"
#include "graspmt/labeling.hpp"
#include "graspmt/nms.hpp"
#include "graspmt/ply_io.hpp"
#include "graspmt/scoring.hpp"

namespace fs = std::filesystem;
using namespace graspmt;

namespace {

std::string idx_name(const char* prefix, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d.%s", prefix, i, ext);
  return buf;
}

RunConfig load_config_opt(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return load_run_config(path);
}

void echo_config(const RunConfig& config, const fs::path& dir) {
  fs::create_directories(dir);
  save_run_config(config, (dir / "config.txt").string());
}

// indices of scene_XXXX.json files present in a directory, ascending
std::vector<int> scene_indices(const fs::path& dir) {
  std::vector<int> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    int i;
    if (std::sscanf(name.c_str(), "scene_%d.json", &i) == 1 &&
        name == idx_name("scene", i, "json"))
      out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int cmd_gen(int n_scenes, int n_objects, uint64_t seed, const std::string& out,
            const RunConfig& config) {
  fs::create_directories(out);
  echo_config(config, out);
  for (int i = 0; i < n_scenes; ++i) {
    uint64_t scene_seed = seed + static_cast<uint64_t>(i);
    int objects = n_objects;
    if (objects < 0) {
      Rng rng(scene_seed ^ 0x94D049BB133111EBull);
      objects = config.objects_min + static_cast<int>(rng.index(
                    static_cast<size_t>(config.objects_max - config.objects_min + 1)));
    }
    SceneSpec scene = generate_scene(scene_seed, objects);
    PointCloud raw = render_partial_cloud(scene, config.scene_points * 4);
    PointCloud cloud = preprocess(raw, scene.workspace_min, scene.workspace_max,
                                  config.scene_points, scene_seed);
    save_scene_spec(scene, (fs::path(out) / idx_name("scene", i, "json")).string());
    save_ply(cloud, (fs::path(out) / idx_name("cloud", i, "ply")).string());
  }
  std::cout << "wrote " << n_scenes << " scene/cloud pairs to " << out << "\n";
  return 0;
}

int cmd_label(const std::string& in, const std::string& out, const RunConfig& config) {
  fs::path out_dir = out.empty() ? fs::path(in) : fs::path(out);
  echo_config(config, out_dir);
  std::vector<int> indices = scene_indices(in);
  if (indices.empty()) throw std::runtime_error("label: no scene_XXXX.json files in " + in);
  for (int i : indices) {
    SceneSpec scene = load_scene_spec((fs::path(in) / idx_name("scene", i, "json")).string());
    PointCloud cloud = load_ply((fs::path(in) / idx_name("cloud", i, "ply")).string());
    PointCloud dense = sample_scene_cloud(scene, 1500, 3000, scene.seed);
    SceneLabels labels = build_scene_labels(cloud, dense, config, scene.seed);
    save_labels(labels, (out_dir / idx_name("labels", i, "json")).string());
  }
  std::cout << "labeled " << indices.size() << " scenes into " << out_dir.string() << "\n";
  return 0;
}

int cmd_train(const std::string& data, const std::string& out, const RunConfig& config) {
  std::vector<TrainingExample> dataset;
  for (int i : scene_indices(data)) {
    fs::path labels_path = fs::path(data) / idx_name("labels", i, "json");
    if (!fs::exists(labels_path)) continue;
    TrainingExample ex;
    ex.cloud = load_ply((fs::path(data) / idx_name("cloud", i, "ply")).string());
    ex.labels = load_labels(labels_path.string());
    dataset.push_back(std::move(ex));
  }
  if (dataset.empty())
    throw std::runtime_error("train: no cloud/label pairs found in " + data);

  Checkpoint ckpt = train(dataset, config.model, config.train);
  save_checkpoint(ckpt, out);
  save_run_config(config, out + ".config.txt");
  std::cout << "trained on " << dataset.size() << " scenes, final epoch loss "
            << ckpt.loss_history.back() << ", checkpoint " << out << "\n";
  return 0;
}

int cmd_infer(const std::string& cloud_path, const std::string& ckpt_path,
              const std::string& out, const RunConfig& config) {
  PointCloud cloud = load_ply(cloud_path);
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  InferParams ip;
  ip.cluster_bandwidth = config.cluster_bandwidth;
  ip.collision_threshold = config.collision_threshold;
  ip.gripper = config.gripper;
  ip.use_collision_head = config.use_collision_head;
  InferResult result = infer(cloud, ckpt, ip);

  Prediction pred;
  pred.instance_ids = result.grasp_instances;
  pred.grasps = result.grasps;
  pred.collision_free = result.collision_free;
  std::vector<Grasp> final_grasps = instance_pose_nms(pred, config.nms);
  save_grasps(final_grasps, out);
  save_run_config(config, out + ".config.txt");
  std::cout << "wrote " << final_grasps.size() << " grasps to " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& pred_dir, const std::string& scenes_dir, const std::string& out,
             const RunConfig& config) {
  std::vector<int> indices = scene_indices(scenes_dir);
  if (indices.empty())
    throw std::runtime_error("eval: no scene_XXXX.json files in " + scenes_dir);

  // success is judged against the dense analytic oracle cloud, not the
  // partial observation the network saw
  std::vector<PointCloud> clouds;
  std::vector<std::optional<std::vector<Grasp>>> preds;
  std::vector<std::string> names;
  for (int i : indices) {
    SceneSpec scene =
        load_scene_spec((fs::path(scenes_dir) / idx_name("scene", i, "json")).string());
    clouds.push_back(sample_scene_cloud(scene, 1500, 3000, scene.seed));
    fs::path pred_path = fs::path(pred_dir) / idx_name("pred", i, "json");
    if (fs::exists(pred_path))
      preds.emplace_back(load_grasps(pred_path.string()));
    else
      preds.emplace_back(std::nullopt);
    names.push_back(idx_name("scene", i, "json"));
  }
  std::vector<const PointCloud*> cloud_ptrs;
  std::vector<const std::vector<Grasp>*> pred_ptrs;
  for (size_t i = 0; i < clouds.size(); ++i) {
    cloud_ptrs.push_back(&clouds[i]);
    pred_ptrs.push_back(preds[i] ? &*preds[i] : nullptr);
  }
  DatasetSummary summary =
      evaluate_dataset(pred_ptrs, cloud_ptrs, names, config.gripper, config.eval);

  std::ofstream os(out, std::ios::binary);
  if (!os) throw std::runtime_error("eval: cannot open for writing " + out);
  os << summary.to_csv();
  save_run_config(config, out + ".config.txt");
  std::cout << summary.to_table();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-task 6-DoF grasp pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  int threads = 0;
  std::optional<uint64_t> global_seed;
  app.add_option("--config", config_path, "run configuration file (key = value)");
  app.add_option("--threads", threads, "worker thread cap (0 = library default)");
  app.add_option("--seed", global_seed, "override the configured seed");

  auto* gen = app.add_subcommand("gen", "generate synthetic scenes and partial clouds");
  int gen_scenes = 1, gen_objects = -1;
  uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--scenes", gen_scenes, "number of scenes")->check(CLI::PositiveNumber);
  gen->add_option("--objects", gen_objects, "objects per scene (default: configured range)");
  gen->add_option("--seed", gen_seed, "base scene seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  auto* label = app.add_subcommand("label", "sample, score and map ground-truth grasps");
  std::string label_in, label_out;
  label->add_option("--in", label_in, "directory with scene/cloud files")->required();
  label->add_option("--out", label_out, "output directory (default: --in)");

  auto* train_cmd = app.add_subcommand("train", "train the multi-task network");
  std::string train_data, train_out;
  train_cmd->add_option("--data", train_data, "directory with cloud/label files")->required();
  train_cmd->add_option("--out", train_out, "checkpoint output path")->required();

  auto* infer_cmd = app.add_subcommand("infer", "predict final grasps for one cloud");
  std::string infer_cloud, infer_ckpt, infer_out;
  infer_cmd->add_option("--cloud", infer_cloud, "input PLY cloud")->required();
  infer_cmd->add_option("--ckpt", infer_ckpt, "trained checkpoint")->required();
  infer_cmd->add_option("--out", infer_out, "output grasp JSON")->required();

  auto* eval_cmd = app.add_subcommand("eval", "score predictions against scene clouds");
  std::string eval_pred, eval_scenes, eval_out;
  eval_cmd->add_option("--pred", eval_pred, "directory with pred_XXXX.json files")->required();
  eval_cmd->add_option("--scenes", eval_scenes, "directory with scene/cloud files")->required();
  eval_cmd->add_option("--out", eval_out, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (threads > 0) omp_set_num_threads(threads);
    RunConfig config = load_config_opt(config_path);
    if (global_seed) config.train.seed = *global_seed;
    config.validate();

    if (gen->parsed())
      return cmd_gen(gen_scenes, gen_objects, global_seed.value_or(gen_seed), gen_out, config);
    if (label->parsed()) return cmd_label(label_in, label_out, config);
    if (train_cmd->parsed()) return cmd_train(train_data, train_out, config);
    if (infer_cmd->parsed()) return cmd_infer(infer_cloud, infer_ckpt, infer_out, config);
    if (eval_cmd->parsed()) return cmd_eval(eval_pred, eval_scenes, eval_out, config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
