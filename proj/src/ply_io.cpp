#include "graspmt/ply_io.hpp"

#include <fstream>
#include <sstream>

namespace graspmt {

namespace {

const char* kHeaderProps =
    "property double x\n"
    "property double y\n"
    "property double z\n"
    "property double nx\n"
    "property double ny\n"
    "property double nz\n"
    "property double red\n"
    "property double green\n"
    "property double blue\n"
    "property double ncx\n"
    "property double ncy\n"
    "property double ncz\n"
    "property int instance_id\n"
    "property uchar semantic\n";

}  // namespace

void save_ply(const PointCloud& cloud, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_ply: cannot open " + path);
  const int n = static_cast<int>(cloud.size());
  os << "ply\nformat binary_little_endian 1.0\n"
     << "element vertex " << n << "\n"
     << kHeaderProps << "end_header\n";
  for (int i = 0; i < n; ++i) {
    double row[12] = {cloud.points(i, 0),     cloud.points(i, 1),     cloud.points(i, 2),
                      cloud.normals(i, 0),    cloud.normals(i, 1),    cloud.normals(i, 2),
                      cloud.colors(i, 0),     cloud.colors(i, 1),     cloud.colors(i, 2),
                      cloud.normalized(i, 0), cloud.normalized(i, 1), cloud.normalized(i, 2)};
    int32_t id = cloud.instance_ids[i];
    uint8_t sem = cloud.semantic[i];
    os.write(reinterpret_cast<const char*>(row), sizeof(row));
    os.write(reinterpret_cast<const char*>(&id), sizeof(id));
    os.write(reinterpret_cast<const char*>(&sem), sizeof(sem));
  }
  if (!os) throw std::runtime_error("save_ply: write failed: " + path);
}

PointCloud load_ply(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_ply: cannot open " + path);

  std::string line;
  std::getline(is, line);
  if (line != "ply") throw std::runtime_error("load_ply: not a PLY file: " + path);
  std::getline(is, line);
  if (line != "format binary_little_endian 1.0")
    throw std::runtime_error("load_ply: unsupported format in " + path);

  int n = -1;
  std::string props;
  while (std::getline(is, line)) {
    if (line == "end_header") break;
    if (line.rfind("comment", 0) == 0) continue;
    if (line.rfind("element vertex ", 0) == 0) {
      n = std::stoi(line.substr(15));
      continue;
    }
    if (line.rfind("property", 0) == 0) {
      props += line + "\n";
      continue;
    }
    throw std::runtime_error("load_ply: unexpected header line: " + line);
  }
  if (n < 0) throw std::runtime_error("load_ply: missing vertex element in " + path);
  if (props != kHeaderProps)
    throw std::runtime_error("load_ply: property layout mismatch in " + path);

  PointCloud cloud;
  cloud.points.resize(n, 3);
  cloud.normals.resize(n, 3);
  cloud.colors.resize(n, 3);
  cloud.normalized.resize(n, 3);
  cloud.instance_ids.resize(n);
  cloud.semantic.resize(n);
  cloud.has_labels = true;
  for (int i = 0; i < n; ++i) {
    double row[12];
    int32_t id;
    uint8_t sem;
    is.read(reinterpret_cast<char*>(row), sizeof(row));
    is.read(reinterpret_cast<char*>(&id), sizeof(id));
    is.read(reinterpret_cast<char*>(&sem), sizeof(sem));
    if (!is) throw std::runtime_error("load_ply: truncated vertex data in " + path);
    cloud.points.row(i) << row[0], row[1], row[2];
    cloud.normals.row(i) << row[3], row[4], row[5];
    cloud.colors.row(i) << row[6], row[7], row[8];
    cloud.normalized.row(i) << row[9], row[10], row[11];
    cloud.instance_ids[i] = id;
    cloud.semantic[i] = sem;
  }
  return cloud;
}

}  // namespace graspmt
