#include "graspmt/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace graspmt {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw std::runtime_error("empty list");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("bad boolean '" + v + "'");
}

struct Field {
  std::string key;
  std::function<std::string(RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

using DRef = std::function<double&(RunConfig&)>;
using IRef = std::function<int&(RunConfig&)>;
using BRef = std::function<bool&(RunConfig&)>;
using URef = std::function<uint64_t&(RunConfig&)>;
using LRef = std::function<std::vector<double>&(RunConfig&)>;

Field fd(std::string key, DRef a) {
  return {std::move(key), [a](RunConfig& c) { return fmt_double(a(c)); },
          [a](RunConfig& c, const std::string& v) { a(c) = std::stod(v); }};
}
Field fi(std::string key, IRef a) {
  return {std::move(key), [a](RunConfig& c) { return std::to_string(a(c)); },
          [a](RunConfig& c, const std::string& v) { a(c) = std::stoi(v); }};
}
Field fb(std::string key, BRef a) {
  return {std::move(key), [a](RunConfig& c) { return std::string(a(c) ? "true" : "false"); },
          [a](RunConfig& c, const std::string& v) { a(c) = parse_bool(v); }};
}
Field fu(std::string key, URef a) {
  return {std::move(key), [a](RunConfig& c) { return std::to_string(a(c)); },
          [a](RunConfig& c, const std::string& v) { a(c) = std::stoull(v); }};
}
Field fl(std::string key, LRef a) {
  return {std::move(key),
          [a](RunConfig& c) {
            std::string out;
            for (size_t i = 0; i < a(c).size(); ++i) {
              if (i) out += ",";
              out += fmt_double(a(c)[i]);
            }
            return out;
          },
          [a](RunConfig& c, const std::string& v) { a(c) = parse_list(v); }};
}

std::vector<Field> make_fields() {
  return {
      fi("scene.points", [](RunConfig& c) -> int& { return c.scene_points; }),
      fi("scene.objects_min", [](RunConfig& c) -> int& { return c.objects_min; }),
      fi("scene.objects_max", [](RunConfig& c) -> int& { return c.objects_max; }),

      fd("gripper.max_width", [](RunConfig& c) -> double& { return c.gripper.max_width; }),
      fd("gripper.finger_length", [](RunConfig& c) -> double& { return c.gripper.finger_length; }),
      fd("gripper.finger_thickness",
         [](RunConfig& c) -> double& { return c.gripper.finger_thickness; }),
      fd("gripper.finger_height", [](RunConfig& c) -> double& { return c.gripper.finger_height; }),
      fd("gripper.base_depth", [](RunConfig& c) -> double& { return c.gripper.base_depth; }),

      fi("sampler.seed_stride", [](RunConfig& c) -> int& { return c.sampler.seed_stride; }),
      fl("sampler.depths", [](RunConfig& c) -> std::vector<double>& { return c.sampler.depths; }),
      fd("sampler.approach_tilt_deg",
         [](RunConfig& c) -> double& { return c.sampler.approach_tilt_deg; }),
      fd("sampler.clearance", [](RunConfig& c) -> double& { return c.sampler.clearance; }),
      fi("sampler.per_point", [](RunConfig& c) -> int& { return c.sampler_per_point; }),
      fd("label.map_radius", [](RunConfig& c) -> double& { return c.label_map_radius; }),
      fd("label.score_min", [](RunConfig& c) -> double& { return c.label_score_min; }),
      fd("label.collision_balance",
         [](RunConfig& c) -> double& { return c.collision_balance; }),

      fi("model.stem_hidden", [](RunConfig& c) -> int& { return c.model.stem_hidden; }),
      fi("model.stem_out", [](RunConfig& c) -> int& { return c.model.stem_out; }),
      fi("model.sa1_out", [](RunConfig& c) -> int& { return c.model.sa1_out; }),
      fi("model.sa2_out", [](RunConfig& c) -> int& { return c.model.sa2_out; }),
      fi("model.fp1_out", [](RunConfig& c) -> int& { return c.model.fp1_out; }),
      fi("model.fp0_out", [](RunConfig& c) -> int& { return c.model.fp0_out; }),
      fi("model.head_hidden", [](RunConfig& c) -> int& { return c.model.head_hidden; }),
      fi("model.sa1_stride", [](RunConfig& c) -> int& { return c.model.sa1_stride; }),
      fi("model.sa2_stride", [](RunConfig& c) -> int& { return c.model.sa2_stride; }),
      fd("model.sa1_radius", [](RunConfig& c) -> double& { return c.model.sa1_radius; }),
      fd("model.sa2_radius", [](RunConfig& c) -> double& { return c.model.sa2_radius; }),
      fi("model.knn_cap", [](RunConfig& c) -> int& { return c.model.knn_cap; }),
      fi("model.interp_k", [](RunConfig& c) -> int& { return c.model.interp_k; }),

      fi("train.epochs", [](RunConfig& c) -> int& { return c.train.epochs; }),
      fd("train.lr", [](RunConfig& c) -> double& { return c.train.lr; }),
      fd("train.decay", [](RunConfig& c) -> double& { return c.train.decay; }),
      fi("train.decay_period", [](RunConfig& c) -> int& { return c.train.decay_period; }),
      fi("train.batch_size", [](RunConfig& c) -> int& { return c.train.batch_size; }),
      fu("train.seed", [](RunConfig& c) -> uint64_t& { return c.train.seed; }),
      fb("train.branch_segmentation",
         [](RunConfig& c) -> bool& { return c.train.toggles.segmentation; }),
      fb("train.branch_grasp", [](RunConfig& c) -> bool& { return c.train.toggles.grasp; }),
      fb("train.branch_collision",
         [](RunConfig& c) -> bool& { return c.train.toggles.collision; }),

      fd("loss.alpha", [](RunConfig& c) -> double& { return c.train.loss.alpha; }),
      fd("loss.delta_v", [](RunConfig& c) -> double& { return c.train.loss.delta_v; }),
      fd("loss.delta_d", [](RunConfig& c) -> double& { return c.train.loss.delta_d; }),
      fd("loss.beta1", [](RunConfig& c) -> double& { return c.train.loss.beta1; }),
      fd("loss.beta2", [](RunConfig& c) -> double& { return c.train.loss.beta2; }),
      fd("loss.beta3", [](RunConfig& c) -> double& { return c.train.loss.beta3; }),
      fd("loss.gamma1", [](RunConfig& c) -> double& { return c.train.loss.gamma1; }),
      fd("loss.gamma2", [](RunConfig& c) -> double& { return c.train.loss.gamma2; }),
      fd("loss.gamma3", [](RunConfig& c) -> double& { return c.train.loss.gamma3; }),
      fd("loss.w1", [](RunConfig& c) -> double& { return c.train.loss.w1; }),
      fd("loss.w2", [](RunConfig& c) -> double& { return c.train.loss.w2; }),
      fd("loss.coll_weight", [](RunConfig& c) -> double& { return c.train.loss.coll_weight; }),
      fb("loss.orth_sign_corrected",
         [](RunConfig& c) -> bool& { return c.train.loss.orth_sign_corrected; }),

      fd("nms.epsilon_t", [](RunConfig& c) -> double& { return c.nms.epsilon_t; }),
      fd("nms.epsilon_r", [](RunConfig& c) -> double& { return c.nms.epsilon_r; }),
      fi("nms.max_keep_per_instance",
         [](RunConfig& c) -> int& { return c.nms.max_keep_per_instance; }),
      fb("nms.conjunction", [](RunConfig& c) -> bool& { return c.nms.conjunction; }),

      fi("eval.k", [](RunConfig& c) -> int& { return c.eval.k; }),
      fl("eval.mu_thresholds",
         [](RunConfig& c) -> std::vector<double>& { return c.eval.mu_thresholds; }),

      fd("infer.cluster_bandwidth", [](RunConfig& c) -> double& { return c.cluster_bandwidth; }),
      fd("infer.collision_threshold",
         [](RunConfig& c) -> double& { return c.collision_threshold; }),
      fb("infer.use_collision_head",
         [](RunConfig& c) -> bool& { return c.use_collision_head; }),
  };
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = make_fields();
  return f;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::validate() const {
  if (scene_points < 1) throw std::runtime_error("config: scene.points must be >= 1");
  if (objects_min < 0 || objects_max < objects_min)
    throw std::runtime_error("config: bad object count range");
  gripper.validate();
  train.loss.validate();
  eval.validate();
  if (nms.epsilon_t <= 0 || nms.epsilon_r <= 0)
    throw std::runtime_error("config: NMS thresholds must be positive");
  if (cluster_bandwidth <= 0)
    throw std::runtime_error("config: cluster bandwidth must be positive");
  if (sampler_per_point < 1 || sampler.seed_stride < 1)
    throw std::runtime_error("config: sampler counts must be >= 1");
}

void apply_config_line(RunConfig& config, const std::string& raw) {
  std::string line = raw;
  size_t hash = line.find('#');
  if (hash != std::string::npos) line = line.substr(0, hash);
  line = trim(line);
  if (line.empty()) return;
  size_t eq = line.find('=');
  if (eq == std::string::npos)
    throw std::runtime_error("config: malformed line (expected key = value): " + raw);
  std::string key = trim(line.substr(0, eq));
  std::string value = trim(line.substr(eq + 1));
  for (const Field& f : fields()) {
    if (f.key == key) {
      try {
        f.set(config, value);
      } catch (const std::exception& e) {
        throw std::runtime_error("config: bad value for " + key + ": " + e.what());
      }
      return;
    }
  }
  throw std::runtime_error("config: unknown key '" + key + "'");
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  RunConfig config;
  std::string line;
  while (std::getline(is, line)) apply_config_line(config, line);
  config.validate();
  return config;
}

std::string dump_run_config(const RunConfig& config) {
  std::string out;
  RunConfig& mut = const_cast<RunConfig&>(config);
  for (const Field& f : fields()) out += f.key + " = " + f.get(mut) + "\n";
  return out;
}

void save_run_config(const RunConfig& config, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("config: cannot open for writing " + path);
  os << dump_run_config(config);
  if (!os) throw std::runtime_error("config: write failed " + path);
}

}  // namespace graspmt
