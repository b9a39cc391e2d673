#pragma once

#include <string>
#include <vector>

#include "graspmt/grasp_geometry.hpp"
#include "graspmt/model.hpp"
#include "graspmt/scene.hpp"

namespace graspmt {

void save_scene_spec(const SceneSpec& scene, const std::string& path);
SceneSpec load_scene_spec(const std::string& path);

/// JSON array of {t, v_A, v_C, width, depth, score, instance_id}; meters.
void save_grasps(const std::vector<Grasp>& grasps, const std::string& path);
std::vector<Grasp> load_grasps(const std::string& path);

/// Per-scene training labels: filtered grasps plus per-point mappings.
void save_labels(const SceneLabels& labels, const std::string& path);
SceneLabels load_labels(const std::string& path);

}  // namespace graspmt
