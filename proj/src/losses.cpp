#include "graspmt/losses.hpp"

#include <cmath>
#include <map>

namespace graspmt {

namespace {

// row-wise two-way softmax probabilities
Eigen::MatrixXd softmax2(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), 2);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double m = std::max(logits(i, 0), logits(i, 1));
    double e0 = std::exp(logits(i, 0) - m), e1 = std::exp(logits(i, 1) - m);
    double z = e0 + e1;
    p(i, 0) = e0 / z;
    p(i, 1) = e1 / z;
  }
  return p;
}

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

}  // namespace

ScalarWithGrad loss_sem(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  const Eigen::Index n = logits.rows();
  if (n == 0 || static_cast<Eigen::Index>(labels.size()) != n)
    throw std::invalid_argument("loss_sem: bad shapes");
  Eigen::MatrixXd p = softmax2(logits);
  ScalarWithGrad out;
  out.grad = Eigen::MatrixXd::Zero(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    int y = labels[i];
    out.value -= std::log(std::max(p(i, y), 1e-300));
    out.grad(i, 0) = (p(i, 0) - (y == 0 ? 1.0 : 0.0)) / n;
    out.grad(i, 1) = (p(i, 1) - (y == 1 ? 1.0 : 0.0)) / n;
  }
  out.value /= n;
  return out;
}

ScalarWithGrad loss_ins(const Eigen::MatrixXd& x, const std::vector<int>& ids,
                        const LossWeights& w) {
  const Eigen::Index n = x.rows();
  if (n == 0) throw std::invalid_argument("loss_ins: empty batch");
  if (static_cast<Eigen::Index>(ids.size()) != n)
    throw std::invalid_argument("loss_ins: id count mismatch");
  w.validate();
  const Eigen::Index d = x.cols();

  std::map<int, std::vector<int>> clusters;
  for (Eigen::Index i = 0; i < n; ++i) clusters[ids[i]].push_back(static_cast<int>(i));
  const int c_count = static_cast<int>(clusters.size());

  std::vector<Eigen::VectorXd> mu;
  std::vector<const std::vector<int>*> members;
  for (const auto& [id, m] : clusters) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(d);
    for (int i : m) s += x.row(i).transpose();
    mu.push_back(s / m.size());
    members.push_back(&m);
  }

  ScalarWithGrad out;
  out.grad = Eigen::MatrixXd::Zero(n, d);
  std::vector<Eigen::VectorXd> dmu(c_count, Eigen::VectorXd::Zero(d));

  // variance term
  double l_var = 0.0;
  for (int c = 0; c < c_count; ++c) {
    const auto& m = *members[c];
    double inv = 1.0 / (c_count * static_cast<double>(m.size()));
    for (int i : m) {
      Eigen::VectorXd diff = x.row(i).transpose() - mu[c];
      double dist = diff.norm();
      double h = dist - w.delta_v;
      if (h > 0) {
        l_var += inv * h * h;
        Eigen::VectorXd u = diff / std::max(dist, 1e-300);
        Eigen::VectorXd g = inv * 2.0 * h * u;
        out.grad.row(i) += g.transpose();
        dmu[c] -= g;
      }
    }
  }

  // distance term (pairs of distinct clusters)
  double l_dist = 0.0;
  if (c_count >= 2) {
    double inv = 1.0 / (c_count * (c_count - 1.0));
    for (int a = 0; a < c_count; ++a)
      for (int b = 0; b < c_count; ++b) {
        if (a == b) continue;
        Eigen::VectorXd diff = mu[a] - mu[b];
        double dist = diff.norm();
        double h = 2.0 * w.delta_d - dist;
        if (h > 0) {
          l_dist += inv * h * h;
          Eigen::VectorXd u = diff / std::max(dist, 1e-300);
          dmu[a] -= inv * 2.0 * h * u;
          dmu[b] += inv * 2.0 * h * u;
        }
      }
  }

  // regularizer
  double l_reg = 0.0;
  for (int c = 0; c < c_count; ++c) {
    double norm = mu[c].norm();
    l_reg += norm / c_count;
    if (norm > 1e-300) dmu[c] += (w.alpha / c_count) * (mu[c] / norm);
  }

  // push mean gradients back to the embeddings
  for (int c = 0; c < c_count; ++c) {
    const auto& m = *members[c];
    Eigen::RowVectorXd g = (dmu[c] / m.size()).transpose();
    for (int i : m) out.grad.row(i) += g;
  }
  out.value = l_var + l_dist + w.alpha * l_reg;
  return out;
}

RotLoss loss_rot(const Eigen::MatrixXd& pred_a, const Eigen::MatrixXd& pred_c,
                 const Eigen::MatrixXd& true_a, const Eigen::MatrixXd& true_c,
                 const LossWeights& w) {
  const Eigen::Index n = pred_a.rows();
  if (pred_c.rows() != n || true_a.rows() != n || true_c.rows() != n)
    throw std::invalid_argument("loss_rot: batch size mismatch");
  RotLoss out;
  out.grad_approach = Eigen::MatrixXd::Zero(n, 3);
  out.grad_closing = Eigen::MatrixXd::Zero(n, 3);
  if (n == 0) return out;

  const double orth_sign = w.orth_sign_corrected ? 1.0 : -1.0;
  const double inv = 1.0 / n;
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec3 pa = pred_a.row(i).transpose(), pc = pred_c.row(i).transpose();
    Vec3 ta = true_a.row(i).transpose(), tc = true_c.row(i).transpose();

    // offset: mean L2 distance, both vectors
    for (auto [p, t, grad] : {std::tuple{pa, ta, &out.grad_approach},
                              std::tuple{pc, tc, &out.grad_closing}}) {
      Vec3 diff = t - p;
      double dist = diff.norm();
      out.off += inv * dist;
      if (dist > 1e-300)
        grad->row(i) += (w.beta1 * inv) * (-(diff / dist)).transpose();
    }
    // cosine: negative absolute dot, both vectors
    for (auto [p, t, grad] : {std::tuple{pa, ta, &out.grad_approach},
                              std::tuple{pc, tc, &out.grad_closing}}) {
      double dot = p.dot(t);
      out.cos += inv * (-std::abs(dot));
      grad->row(i) += (w.beta2 * inv) * (-sgn(dot)) * t.transpose();
    }
    // orthogonality of the predicted pair
    double dot = pa.dot(pc);
    out.orth += inv * orth_sign * std::abs(dot);
    out.grad_approach.row(i) += (w.beta3 * inv) * orth_sign * sgn(dot) * pc.transpose();
    out.grad_closing.row(i) += (w.beta3 * inv) * orth_sign * sgn(dot) * pa.transpose();
  }
  out.value = w.beta1 * out.off + w.beta2 * out.cos + w.beta3 * out.orth;
  return out;
}

ScalarWithGrad loss_gp(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                       const std::vector<uint8_t>& ignore, const LossWeights& w) {
  const Eigen::Index n = logits.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n ||
      static_cast<Eigen::Index>(ignore.size()) != n)
    throw std::invalid_argument("loss_gp: bad shapes");
  Eigen::Index active = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!ignore[i]) ++active;
  if (active == 0) throw std::invalid_argument("loss_gp: every point is ignored");

  Eigen::MatrixXd p = softmax2(logits);
  ScalarWithGrad out;
  out.grad = Eigen::MatrixXd::Zero(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (ignore[i]) continue;
    int y = labels[i];
    double wt = (y == 1 ? w.w2 : w.w1) / active;
    out.value -= wt * std::log(std::max(p(i, y), 1e-300));
    out.grad(i, 0) = wt * (p(i, 0) - (y == 0 ? 1.0 : 0.0));
    out.grad(i, 1) = wt * (p(i, 1) - (y == 1 ? 1.0 : 0.0));
  }
  return out;
}

RegressionLoss loss_regression(const Eigen::VectorXd& pw, const Eigen::VectorXd& pd,
                               const Eigen::VectorXd& ps, const Eigen::VectorXd& tw,
                               const Eigen::VectorXd& td, const Eigen::VectorXd& ts,
                               const LossWeights& w) {
  const Eigen::Index n = pw.size();
  RegressionLoss out;
  out.grad_width = Eigen::VectorXd::Zero(n);
  out.grad_depth = Eigen::VectorXd::Zero(n);
  out.grad_score = Eigen::VectorXd::Zero(n);
  if (n == 0) return out;  // empty graspable set contributes nothing
  if (pd.size() != n || ps.size() != n || tw.size() != n || td.size() != n || ts.size() != n)
    throw std::invalid_argument("loss_regression: size mismatch");

  auto mse = [n](const Eigen::VectorXd& p, const Eigen::VectorXd& t, double gamma,
                 Eigen::VectorXd& grad) {
    Eigen::VectorXd diff = p - t;
    grad = (gamma * 2.0 / n) * diff;
    return gamma * diff.squaredNorm() / n;
  };
  out.value = mse(pw, tw, w.gamma1, out.grad_width) + mse(pd, td, w.gamma2, out.grad_depth) +
              mse(ps, ts, w.gamma3, out.grad_score);
  return out;
}

ScalarWithGrad loss_coll(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  const Eigen::Index n = logits.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw std::invalid_argument("loss_coll: bad shapes");
  ScalarWithGrad out;
  out.grad = Eigen::MatrixXd::Zero(n, 2);
  if (n == 0) return out;
  Eigen::MatrixXd p = softmax2(logits);
  for (Eigen::Index i = 0; i < n; ++i) {
    int y = labels[i];
    out.value -= std::log(std::max(p(i, y), 1e-300));
    out.grad(i, 0) = p(i, 0) - (y == 0 ? 1.0 : 0.0);
    out.grad(i, 1) = p(i, 1) - (y == 1 ? 1.0 : 0.0);
  }
  return out;
}

QuatLoss loss_quat_baseline(const std::vector<Mat3>& pred, const std::vector<Mat3>& truth) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("loss_quat_baseline: batch size mismatch");
  QuatLoss out;
  out.grad.assign(pred.size(), Mat3::Zero());
  if (pred.empty()) return out;
  const double lim = 1.0 - 1e-7;
  const double inv = 1.0 / pred.size();
  for (size_t i = 0; i < pred.size(); ++i) {
    double arg = ((truth[i] * pred[i].transpose()).trace() - 1.0) * 0.5;
    double clamped = std::clamp(arg, -lim, lim);
    out.value += inv * std::acos(clamped);
    if (arg > -lim && arg < lim) {
      double dacos = -1.0 / std::sqrt(1.0 - clamped * clamped);
      // d trace(T P^T) / dP = T
      out.grad[i] = inv * dacos * 0.5 * truth[i];
    }
  }
  return out;
}

TotalLoss loss_total(const TotalLossInputs& in, const LossWeights& w) {
  TotalLoss out;
  ScalarWithGrad sem = loss_sem(in.sem_logits, in.sem_labels);
  ScalarWithGrad ins = loss_ins(in.embeddings, in.embedding_instances, w);
  ScalarWithGrad gp = loss_gp(in.gp_logits, in.gp_labels, in.gp_ignore, w);
  RotLoss rot = loss_rot(in.pred_approach, in.pred_closing, in.true_approach, in.true_closing, w);
  RegressionLoss reg = loss_regression(in.pred_width, in.pred_depth, in.pred_score, in.true_width,
                                       in.true_depth, in.true_score, w);
  ScalarWithGrad coll = loss_coll(in.coll_logits, in.coll_labels);

  out.sem = sem.value;
  out.ins = ins.value;
  out.gp = gp.value;
  out.rot = rot.value;
  out.reg = reg.value;
  out.coll = coll.value;
  out.value = sem.value + ins.value + gp.value + rot.value + reg.value + coll.value;
  out.d_sem_logits = std::move(sem.grad);
  out.d_embeddings = std::move(ins.grad);
  out.d_gp_logits = std::move(gp.grad);
  out.d_approach = std::move(rot.grad_approach);
  out.d_closing = std::move(rot.grad_closing);
  out.d_width = std::move(reg.grad_width);
  out.d_depth = std::move(reg.grad_depth);
  out.d_score = std::move(reg.grad_score);
  out.d_coll_logits = std::move(coll.grad);
  return out;
}

}  // namespace graspmt
