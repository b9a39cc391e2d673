#pragma once

#include "graspmt/common.hpp"

namespace graspmt {

struct LossWeights {
  double alpha = 0.01;   // regularization weight in the instance loss
  double delta_v = 0.5;  // variance hinge margin
  double delta_d = 1.5;  // distance hinge margin
  double beta1 = 5.0, beta2 = 1.0, beta3 = 1.0;      // rotation loss terms
  double gamma1 = 100.0, gamma2 = 1000.0, gamma3 = 10.0;  // width/depth/score MSE
  double w1 = 1.0, w2 = 5.0;  // graspable CE class weights (negative, positive)
  // training-time scale on the per-point-averaged collision CE; the reference
  // formulation sums the term over labeled points, so plain averaging
  // under-weights it by the labeled-point count
  double coll_weight = 8.0;
  // L_orth as printed rewards alignment; this flag switches to the
  // orthogonality-encouraging sign (+|vA.vC|)
  bool orth_sign_corrected = false;

  void validate() const {
    for (double v : {alpha, delta_v, delta_d, beta1, beta2, beta3, gamma1, gamma2, gamma3, w1, w2,
                     coll_weight})
      if (v < 0) throw std::invalid_argument("LossWeights: weights must be nonnegative");
  }
};

struct ScalarWithGrad {
  double value = 0.0;
  Eigen::MatrixXd grad;  // same shape as the differentiated argument
};

/// Mean two-class softmax cross-entropy. labels in {0,1}.
ScalarWithGrad loss_sem(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

/// Discriminative instance loss (variance + distance + alpha * regularizer).
/// The distance term is skipped for a single instance. Throws on empty input.
ScalarWithGrad loss_ins(const Eigen::MatrixXd& embeddings, const std::vector<int>& instance_ids,
                        const LossWeights& w);

struct RotLoss {
  double value = 0.0;
  double off = 0.0, cos = 0.0, orth = 0.0;  // unweighted terms
  Eigen::MatrixXd grad_approach;            // N x 3, wrt predictions
  Eigen::MatrixXd grad_closing;
};

/// Decomposed rotation loss beta1*L_off + beta2*L_cos + beta3*L_orth,
/// with each term summing the approach and closing vector contributions and
/// averaging over the batch. Ground-truth vectors must be unit length.
RotLoss loss_rot(const Eigen::MatrixXd& pred_approach, const Eigen::MatrixXd& pred_closing,
                 const Eigen::MatrixXd& true_approach, const Eigen::MatrixXd& true_closing,
                 const LossWeights& w);

/// Class-weighted graspable cross-entropy over non-ignored points.
/// Throws when every point is ignored.
ScalarWithGrad loss_gp(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                       const std::vector<uint8_t>& ignore, const LossWeights& w);

struct RegressionLoss {
  double value = 0.0;
  Eigen::VectorXd grad_width, grad_depth, grad_score;
};

/// gamma1*MSE(width) + gamma2*MSE(depth) + gamma3*MSE(score) over graspable
/// rows only; empty input contributes zero.
RegressionLoss loss_regression(const Eigen::VectorXd& pred_width, const Eigen::VectorXd& pred_depth,
                               const Eigen::VectorXd& pred_score, const Eigen::VectorXd& true_width,
                               const Eigen::VectorXd& true_depth, const Eigen::VectorXd& true_score,
                               const LossWeights& w);

/// Summed binary cross-entropy through a two-way softmax.
ScalarWithGrad loss_coll(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

/// Mean relative rotation angle arccos((trace(R_true * R_pred^T) - 1)/2),
/// clamped away from the arccos endpoints. Gradients wrt predicted entries.
struct QuatLoss {
  double value = 0.0;
  std::vector<Mat3> grad;
};
QuatLoss loss_quat_baseline(const std::vector<Mat3>& pred, const std::vector<Mat3>& truth);

struct TotalLossInputs {
  // segmentation branch
  Eigen::MatrixXd sem_logits;            // N x 2
  std::vector<int> sem_labels;           // 0/1
  Eigen::MatrixXd embeddings;            // F x 16, foreground rows
  std::vector<int> embedding_instances;  // F
  // grasp branch
  Eigen::MatrixXd gp_logits;             // N x 2
  std::vector<int> gp_labels;
  std::vector<uint8_t> gp_ignore;
  Eigen::MatrixXd pred_approach, pred_closing;  // P_g x 3
  Eigen::MatrixXd true_approach, true_closing;
  Eigen::VectorXd pred_width, pred_depth, pred_score;
  Eigen::VectorXd true_width, true_depth, true_score;
  // collision branch
  Eigen::MatrixXd coll_logits;           // M x 2
  std::vector<int> coll_labels;
};

struct TotalLoss {
  double value = 0.0;
  double sem = 0.0, ins = 0.0, gp = 0.0, rot = 0.0, reg = 0.0, coll = 0.0;
  Eigen::MatrixXd d_sem_logits, d_embeddings, d_gp_logits;
  Eigen::MatrixXd d_approach, d_closing;
  Eigen::VectorXd d_width, d_depth, d_score;
  Eigen::MatrixXd d_coll_logits;
};

/// L = L_seg + L_grasp + L_coll; exact sum of the component functions above.
TotalLoss loss_total(const TotalLossInputs& in, const LossWeights& w);

}  // namespace graspmt
