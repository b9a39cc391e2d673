#pragma once

#include <string>

#include "graspmt/scene.hpp"

namespace graspmt {

/// Binary little-endian PLY with per-point properties
///   double x y z nx ny nz red green blue ncx ncy ncz
///   int    instance_id
///   uchar  semantic
/// Doubles round-trip bit-exactly. Throws std::runtime_error on I/O errors
/// or malformed headers.
void save_ply(const PointCloud& cloud, const std::string& path);
PointCloud load_ply(const std::string& path);

}  // namespace graspmt
