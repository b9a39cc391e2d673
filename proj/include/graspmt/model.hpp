#pragma once

#include <map>
#include <string>

#include "graspmt/grasp_geometry.hpp"
#include "graspmt/losses.hpp"
#include "graspmt/scene.hpp"

namespace graspmt {

/// Reduced encoder-decoder: a shared per-point stem, two radius-grouping
/// abstraction stages, two inverse-distance interpolation stages and three
/// parallel decoder heads. Head output widths are fixed: segmentation
/// N x (2+16), grasp N x (2+6+1+1+1), collision N x 2.
struct ModelConfig {
  int in_channels = 9;
  int stem_hidden = 32, stem_out = 32;
  int sa1_out = 64, sa2_out = 96;
  int fp1_out = 96, fp0_out = 64;
  int head_hidden = 48;
  int sa1_stride = 4, sa2_stride = 4;
  double sa1_radius = 0.05, sa2_radius = 0.12;
  int knn_cap = 16;  // max neighbors per grouping centroid
  int interp_k = 3;  // coarse neighbors per interpolation target

  static constexpr int kSegOut = 18;    // 2 semantic logits + 16-dim embedding
  static constexpr int kGraspOut = 11;  // 2 logits + vA + vC + depth + width + score
  static constexpr int kCollOut = 2;
  static constexpr int kEmbeddingDim = 16;
};

struct HeadOutputs {
  Eigen::MatrixXd seg;    // N x 18
  Eigen::MatrixXd grasp;  // N x 11
  Eigen::MatrixXd coll;   // N x 2
};

/// Named parameter tensors; map order fixes every iteration order
/// (initialization, Adam, checkpoints).
struct Params {
  std::map<std::string, Eigen::MatrixXd> tensors;

  Eigen::Index count() const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
  void set_zero();
};

Params init_params(const ModelConfig& config, uint64_t seed);

/// Fixed geometric structure of one abstraction stage: centroid rows of the
/// source set and a CSR neighbor list with radius-scaled relative positions.
struct Grouping {
  std::vector<int> centroids;
  std::vector<int> offsets;    // size centroids+1
  std::vector<int> neighbors;  // source row per pair
  Eigen::MatrixXd relpos;      // pairs x 3
};

/// Inverse-distance interpolation from a coarse set to a target set.
struct Interp {
  Eigen::MatrixXi indices;  // targets x k, coarse rows
  Eigen::MatrixXd weights;  // targets x k, rows sum to 1
};

/// Activations retained by forward() for the backward pass.
struct ForwardCache {
  std::vector<int> perm, inv_perm;  // internal lexicographic point order
  Eigen::MatrixXd x;                // sorted input features
  Eigen::MatrixXd z0a, f0a, z0b, f0;
  Grouping g1, g2;
  Eigen::MatrixXd a1, z1, y1, f1;  // stage 1 pair inputs/activations, pooled
  Eigen::MatrixXd a2, z2, y2, f2;
  Interp i1, i0;
  Eigen::MatrixXd c1, zf1, e1;  // fp1 concat, pre-activation, output
  Eigen::MatrixXd c0, zf0, h;   // fp0 concat, pre-activation, shared features
  Eigen::MatrixXd zh[3], ah[3]; // head hidden layers (seg, grasp, coll)
};

HeadOutputs forward(const Eigen::MatrixXd& features, const Eigen::MatrixX3d& positions,
                    const Params& params, const ModelConfig& config,
                    ForwardCache* cache = nullptr);

/// Gradients of a scalar loss wrt every parameter, given gradients wrt the
/// three head outputs from the same forward call.
Params backward(const ForwardCache& cache, const Params& params, const ModelConfig& config,
                const Eigen::MatrixXd& d_seg, const Eigen::MatrixXd& d_grasp,
                const Eigen::MatrixXd& d_coll);

/// Per-point training labels for one scene.
struct SceneLabels {
  std::vector<Grasp> grasps;        // filtered ground-truth grasps
  std::vector<int> grasp_index;     // per point, -1 = none
  std::vector<uint8_t> graspable;   // per point
  std::vector<uint8_t> ignore;      // per point
  std::vector<uint8_t> coll_valid;  // per point, 1 = has a collision label
  std::vector<int> coll_label;      // 1 = collision-free
};

struct BranchToggles {
  bool segmentation = true;
  bool grasp = true;
  bool collision = true;
};

struct LossBreakdown {
  double total = 0.0;
  double sem = 0.0, ins = 0.0, gp = 0.0, rot = 0.0, reg = 0.0, coll = 0.0;
};

/// Assembles per-branch loss inputs from labels, evaluates the joint loss and
/// scatters the loss gradients into head-shaped matrices.
LossBreakdown compute_losses(const PointCloud& cloud, const SceneLabels& labels,
                             const HeadOutputs& heads, const LossWeights& weights,
                             const BranchToggles& toggles, Eigen::MatrixXd* d_seg,
                             Eigen::MatrixXd* d_grasp, Eigen::MatrixXd* d_coll);

struct TrainConfig {
  int epochs = 30;
  double lr = 1e-3;
  double decay = 0.5;
  int decay_period = 10;
  int batch_size = 2;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  uint64_t seed = 1;
  LossWeights loss;
  BranchToggles toggles;

  /// Reference regime: 80 epochs, lr 0.05 halved every 10 epochs, batch 64.
  static TrainConfig reference_preset();
};

struct TrainingExample {
  PointCloud cloud;
  SceneLabels labels;
};

struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  Params params;
  std::vector<double> loss_history;  // mean epoch loss
};

/// Full-batch Adam training; deterministic in config.seed. Throws on
/// non-finite loss.
Checkpoint train(const std::vector<TrainingExample>& dataset, const ModelConfig& model_config,
                 const TrainConfig& config, const Params* warm_start = nullptr);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct InferParams {
  double cluster_bandwidth = 1.5;
  double collision_threshold = 0.5;
  GripperModel gripper;
  // pose-only operation: skip the collision head and treat all grasps as free
  bool use_collision_head = true;
};

struct InferResult {
  HeadOutputs heads;
  std::vector<int> instance_ids;      // per point, 0 = predicted background
  std::vector<Grasp> grasps;          // one per predicted-graspable point
  std::vector<int> grasp_instances;   // aligned with grasps
  std::vector<uint8_t> collision_free;
};

InferResult infer(const PointCloud& cloud, const Checkpoint& ckpt,
                  const InferParams& params = {});

}  // namespace graspmt
