#pragma once

#include <string>

#include "graspmt/eval.hpp"
#include "graspmt/grasp_geometry.hpp"
#include "graspmt/model.hpp"
#include "graspmt/nms.hpp"

namespace graspmt {

/// Every pipeline tunable in one place, loadable from a plain `key = value`
/// file ('#' comments). Unknown keys are rejected; the effective config is
/// echoed into every output directory.
struct RunConfig {
  // scene generation / preprocessing
  int scene_points = 2048;
  int objects_min = 3, objects_max = 5;

  GripperModel gripper;
  SamplerParams sampler;
  int sampler_per_point = 6;  // closing directions per seed point
  double label_map_radius = 0.005;
  double label_score_min = 0.5;
  double collision_balance = 1.0;  // majority:minority cap in the collision set

  ModelConfig model;
  TrainConfig train;
  NmsConfig nms;
  EvalConfig eval;

  double cluster_bandwidth = 1.5;
  double collision_threshold = 0.5;
  bool use_collision_head = true;

  void validate() const;
};

/// Parses `key = value` lines; throws std::runtime_error naming the first
/// unknown key or malformed line.
RunConfig load_run_config(const std::string& path);
void apply_config_line(RunConfig& config, const std::string& line);

/// Canonical echo: every key in fixed order, parseable by load_run_config.
std::string dump_run_config(const RunConfig& config);
void save_run_config(const RunConfig& config, const std::string& path);

}  // namespace graspmt
