#pragma once

#include "graspmt/config.hpp"
#include "graspmt/model.hpp"
#include "graspmt/scene.hpp"

namespace graspmt {

/// Ground-truth labels for one scene. Candidates are seeded on the observed
/// partial cloud, but width, force closure and collision are judged against a
/// dense analytic sampling of the scene: the partial cloud has no back-side
/// points to contact. Deterministic in scene_seed.
SceneLabels build_scene_labels(const PointCloud& cloud, const PointCloud& dense,
                               const RunConfig& config, uint64_t scene_seed);

}  // namespace graspmt
