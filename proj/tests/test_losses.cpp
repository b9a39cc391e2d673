#include <cmath>
#include <functional>

#include "doctest.h"
#include "graspmt/losses.hpp"

using namespace graspmt;

namespace {

constexpr double kH = 1e-4;

// central finite difference of f at x along coordinate (i, j)
template <typename F>
double fd(F f, Eigen::MatrixXd& x, Eigen::Index i, Eigen::Index j) {
  double orig = x(i, j);
  x(i, j) = orig + kH;
  double hi = f();
  x(i, j) = orig - kH;
  double lo = f();
  x(i, j) = orig;
  return (hi - lo) / (2.0 * kH);
}

void check_grad(const Eigen::MatrixXd& analytic, Eigen::MatrixXd& x,
                const std::function<double()>& f, double tol = 1e-4) {
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      double num = fd(f, x, i, j);
      double denom = std::max({std::abs(num), std::abs(analytic(i, j)), 1e-4});
      CHECK(std::abs(num - analytic(i, j)) / denom < tol);
    }
}

Eigen::MatrixXd random_mat(Rng& rng, int r, int c, double scale = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

}  // namespace

TEST_CASE("loss_sem basics") {
  Eigen::MatrixXd logits(3, 2);
  logits << 20, -20, 20, -20, 20, -20;
  std::vector<int> labels = {0, 0, 0};
  CHECK(loss_sem(logits, labels).value == doctest::Approx(0.0).epsilon(1e-9));

  logits.setZero();
  CHECK(loss_sem(logits, labels).value == doctest::Approx(std::log(2.0)));
}

TEST_CASE("loss_sem gradient") {
  Rng rng(3);
  Eigen::MatrixXd logits = random_mat(rng, 12, 2);
  std::vector<int> labels;
  for (int i = 0; i < 12; ++i) labels.push_back(static_cast<int>(rng.index(2)));
  ScalarWithGrad out = loss_sem(logits, labels);
  check_grad(out.grad, logits, [&] { return loss_sem(logits, labels).value; });
}

TEST_CASE("loss_ins closed forms") {
  LossWeights w;
  // two clusters collapsed to their means, means 2*delta_d + 1 apart
  Eigen::MatrixXd x(4, 16);
  x.setZero();
  x(0, 0) = x(1, 0) = 0.0;
  x(2, 0) = x(3, 0) = 2.0 * w.delta_d + 1.0;
  std::vector<int> ids = {1, 1, 2, 2};
  double expected_reg = (0.0 + (2.0 * w.delta_d + 1.0)) / 2.0;
  CHECK(loss_ins(x, ids, w).value == doctest::Approx(w.alpha * expected_reg));

  // single cluster at the origin
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(5, 16);
  std::vector<int> one(5, 3);
  CHECK(loss_ins(z, one, w).value == doctest::Approx(0.0));

  CHECK_THROWS(loss_ins(Eigen::MatrixXd(0, 16), {}, w));
}

TEST_CASE("loss_ins id permutation invariance") {
  Rng rng(11);
  LossWeights w;
  Eigen::MatrixXd x = random_mat(rng, 20, 16);
  std::vector<int> ids, relabeled;
  for (int i = 0; i < 20; ++i) {
    int c = static_cast<int>(rng.index(3));
    ids.push_back(c + 1);
    relabeled.push_back(9 - c);  // arbitrary bijection
  }
  CHECK(loss_ins(x, ids, w).value == doctest::Approx(loss_ins(x, relabeled, w).value));
}

TEST_CASE("loss_ins gradient") {
  Rng rng(7);
  LossWeights w;
  Eigen::MatrixXd x = random_mat(rng, 30, 16, 2.0);
  std::vector<int> ids;
  for (int i = 0; i < 30; ++i) ids.push_back(static_cast<int>(i % 3));
  ScalarWithGrad out = loss_ins(x, ids, w);
  check_grad(out.grad, x, [&] { return loss_ins(x, ids, w).value; });
}

TEST_CASE("loss_rot closed forms") {
  LossWeights w;
  Eigen::MatrixXd va(1, 3), vc(1, 3);
  va << 0, 0, 1;
  vc << 1, 0, 0;

  // exact match: off = 0, cos = -1 per vector (-2 summed), orth = 0
  RotLoss exact = loss_rot(va, vc, va, vc, w);
  CHECK(exact.off == doctest::Approx(0.0));
  CHECK(exact.cos == doctest::Approx(-2.0));
  CHECK(exact.orth == doctest::Approx(0.0));
  CHECK(exact.value == doctest::Approx(w.beta2 * -2.0));

  // antipodal prediction: off = 2 per vector, cos still -1 per vector (|dot|)
  RotLoss anti = loss_rot(-va, -vc, va, vc, w);
  CHECK(anti.off == doctest::Approx(4.0));
  CHECK(anti.cos == doctest::Approx(-2.0));
}

TEST_CASE("loss_rot orth sign flag") {
  LossWeights w;
  Eigen::MatrixXd va(1, 3), vc(1, 3), ta(1, 3), tc(1, 3);
  va << 1, 0, 0;
  vc << 0.8, 0.6, 0;  // not orthogonal to va
  ta << 1, 0, 0;
  tc << 0, 1, 0;
  double printed = loss_rot(va, vc, ta, tc, w).orth;
  w.orth_sign_corrected = true;
  double corrected = loss_rot(va, vc, ta, tc, w).orth;
  CHECK(printed == doctest::Approx(-0.8));
  CHECK(corrected == doctest::Approx(0.8));
}

TEST_CASE("loss_rot gradient") {
  Rng rng(5);
  LossWeights w;
  const int n = 8;
  Eigen::MatrixXd ta(n, 3), tc(n, 3);
  for (int i = 0; i < n; ++i) {
    Vec3 a = rng.unit_vector();
    Vec3 c = rng.unit_vector();
    c = (c - c.dot(a) * a).normalized();
    ta.row(i) = a.transpose();
    tc.row(i) = c.transpose();
  }
  Eigen::MatrixXd pa = ta + random_mat(rng, n, 3, 0.2);
  Eigen::MatrixXd pc = tc + random_mat(rng, n, 3, 0.2);
  RotLoss out = loss_rot(pa, pc, ta, tc, w);
  check_grad(out.grad_approach, pa, [&] { return loss_rot(pa, pc, ta, tc, w).value; });
  check_grad(out.grad_closing, pc, [&] { return loss_rot(pa, pc, ta, tc, w).value; });
}

TEST_CASE("loss_gp weighting and errors") {
  LossWeights w;
  Eigen::MatrixXd logits(1, 2);
  logits << 1.0, -1.0;  // confident class 0

  // one misclassified graspable point vs one misclassified background point
  double pos = loss_gp(logits, {1}, {0}, w).value;
  Eigen::MatrixXd flipped(1, 2);
  flipped << -1.0, 1.0;
  double neg = loss_gp(flipped, {0}, {0}, w).value;
  CHECK(pos / neg == doctest::Approx(w.w2 / w.w1));

  CHECK_THROWS(loss_gp(logits, {1}, {1}, w));
}

TEST_CASE("loss_gp gradient") {
  Rng rng(9);
  LossWeights w;
  Eigen::MatrixXd logits = random_mat(rng, 10, 2);
  std::vector<int> labels;
  std::vector<uint8_t> ignore;
  for (int i = 0; i < 10; ++i) {
    labels.push_back(static_cast<int>(rng.index(2)));
    ignore.push_back(i % 4 == 0);
  }
  ScalarWithGrad out = loss_gp(logits, labels, ignore, w);
  check_grad(out.grad, logits, [&] { return loss_gp(logits, labels, ignore, w).value; });
}

TEST_CASE("loss_regression closed forms and gradient") {
  LossWeights w;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd werr = Eigen::VectorXd::Constant(1, 0.01);
  CHECK(loss_regression(z, z, z, z, z, z, w).value == doctest::Approx(0.0));
  CHECK(loss_regression(werr, z, z, z, z, z, w).value == doctest::Approx(w.gamma1 * 1e-4));
  CHECK(loss_regression(Eigen::VectorXd(), Eigen::VectorXd(), Eigen::VectorXd(),
                        Eigen::VectorXd(), Eigen::VectorXd(), Eigen::VectorXd(), w)
            .value == doctest::Approx(0.0));

  Rng rng(13);
  const int n = 6;
  Eigen::MatrixXd all = random_mat(rng, n, 6, 0.1);
  auto value = [&] {
    return loss_regression(all.col(0), all.col(1), all.col(2), all.col(3), all.col(4),
                           all.col(5), w)
        .value;
  };
  RegressionLoss out =
      loss_regression(all.col(0), all.col(1), all.col(2), all.col(3), all.col(4), all.col(5), w);
  Eigen::MatrixXd grads(n, 6);
  grads << out.grad_width, out.grad_depth, out.grad_score, -out.grad_width, -out.grad_depth,
      -out.grad_score;
  check_grad(grads, all, value);
}

TEST_CASE("loss_coll closed forms and gradient") {
  Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(7, 2);
  std::vector<int> labels(7, 1);
  CHECK(loss_coll(logits, labels).value == doctest::Approx(7.0 * std::log(2.0)));

  Eigen::MatrixXd confident(2, 2);
  confident << -30, 30, -30, 30;
  CHECK(loss_coll(confident, {1, 1}).value == doctest::Approx(0.0).epsilon(1e-9));

  Rng rng(17);
  Eigen::MatrixXd r(9, 2);
  for (int i = 0; i < 9; ++i) {
    r(i, 0) = rng.normal();
    r(i, 1) = rng.normal();
  }
  std::vector<int> rl;
  for (int i = 0; i < 9; ++i) rl.push_back(static_cast<int>(rng.index(2)));
  ScalarWithGrad out = loss_coll(r, rl);
  check_grad(out.grad, r, [&] { return loss_coll(r, rl).value; });
}

TEST_CASE("loss_quat_baseline") {
  Mat3 eye = Mat3::Identity();
  CHECK(loss_quat_baseline({eye}, {eye}).value == doctest::Approx(0.0).epsilon(1e-3));

  Mat3 rot90;
  rot90 << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK(loss_quat_baseline({rot90}, {eye}).value == doctest::Approx(M_PI / 2));

  // gradient wrt predicted matrix entries, away from the arccos endpoints
  Rng rng(21);
  Vec3 axis = rng.unit_vector();
  Mat3 pred = Eigen::AngleAxisd(1.1, axis).toRotationMatrix();
  QuatLoss out = loss_quat_baseline({pred}, {eye});
  Eigen::MatrixXd p = pred;
  auto value = [&] {
    Mat3 m = p;
    return loss_quat_baseline({m}, {eye}).value;
  };
  Eigen::MatrixXd analytic = out.grad[0];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double orig = p(i, j);
      p(i, j) = orig + kH;
      double hi = value();
      p(i, j) = orig - kH;
      double lo = value();
      p(i, j) = orig;
      double num = (hi - lo) / (2.0 * kH);
      CHECK(std::abs(num - analytic(i, j)) / std::max(std::abs(num), 1e-3) < 1e-3);
    }
}

TEST_CASE("loss_total additivity") {
  Rng rng(23);
  LossWeights w;
  TotalLossInputs in;
  const int n = 10;
  in.sem_logits = random_mat(rng, n, 2);
  in.embeddings = random_mat(rng, n, 16);
  in.gp_logits = random_mat(rng, n, 2);
  in.coll_logits = random_mat(rng, n, 2);
  for (int i = 0; i < n; ++i) {
    in.sem_labels.push_back(static_cast<int>(rng.index(2)));
    in.embedding_instances.push_back(static_cast<int>(rng.index(3)));
    in.gp_labels.push_back(static_cast<int>(rng.index(2)));
    in.gp_ignore.push_back(0);
    in.coll_labels.push_back(static_cast<int>(rng.index(2)));
  }
  in.pred_approach = random_mat(rng, 4, 3);
  in.pred_closing = random_mat(rng, 4, 3);
  in.true_approach.resize(4, 3);
  in.true_closing.resize(4, 3);
  for (int i = 0; i < 4; ++i) {
    Vec3 a = rng.unit_vector();
    Vec3 c = rng.unit_vector();
    c = (c - c.dot(a) * a).normalized();
    in.true_approach.row(i) = a.transpose();
    in.true_closing.row(i) = c.transpose();
  }
  in.pred_width = Eigen::VectorXd::Random(4);
  in.pred_depth = Eigen::VectorXd::Random(4);
  in.pred_score = Eigen::VectorXd::Random(4);
  in.true_width = Eigen::VectorXd::Random(4);
  in.true_depth = Eigen::VectorXd::Random(4);
  in.true_score = Eigen::VectorXd::Random(4);

  TotalLoss total = loss_total(in, w);
  double sum = total.sem + total.ins + total.gp + total.rot + total.reg + total.coll;
  CHECK(total.value == doctest::Approx(sum).epsilon(1e-12));
}
