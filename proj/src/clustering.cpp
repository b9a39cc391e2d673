#include "graspmt/clustering.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace graspmt {

namespace {

// lexicographic row order; used so every reduction below is independent of
// the caller's row order
std::vector<int> lex_order(const Eigen::MatrixXd& x) {
  std::vector<int> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&x](int a, int b) {
    for (Eigen::Index d = 0; d < x.cols(); ++d) {
      if (x(a, d) < x(b, d)) return true;
      if (x(a, d) > x(b, d)) return false;
    }
    return false;
  });
  return order;
}

}  // namespace

ClusterResult meanshift(const Eigen::MatrixXd& embeddings, double bandwidth, int max_iters,
                        double tol, ExecMode mode) {
  if (embeddings.rows() < 1) throw std::invalid_argument("meanshift: empty input");
  if (bandwidth <= 0) throw std::invalid_argument("meanshift: bandwidth must be > 0");
  const int m = static_cast<int>(embeddings.rows());
  const int d = static_cast<int>(embeddings.cols());

  std::vector<int> order = lex_order(embeddings);
  Eigen::MatrixXd x(m, d);
  for (int i = 0; i < m; ++i) x.row(i) = embeddings.row(order[i]);

  // seed one mean per occupied bin (bin = bandwidth / 2)
  const double bin = bandwidth * 0.5;
  std::map<std::vector<int64_t>, std::pair<Eigen::VectorXd, int>> bins;
  for (int i = 0; i < m; ++i) {
    std::vector<int64_t> key(d);
    for (int a = 0; a < d; ++a) key[a] = static_cast<int64_t>(std::floor(x(i, a) / bin));
    auto it = bins.find(key);
    if (it == bins.end())
      bins.emplace(std::move(key), std::make_pair(Eigen::VectorXd(x.row(i).transpose()), 1));
    else {
      it->second.first += x.row(i).transpose();
      it->second.second += 1;
    }
  }
  Eigen::MatrixXd seeds(bins.size(), d);
  {
    int s = 0;
    for (const auto& [key, acc] : bins) seeds.row(s++) = (acc.first / acc.second).transpose();
  }

  const double bw2 = bandwidth * bandwidth;
  const int n_seeds = static_cast<int>(seeds.rows());
  Eigen::MatrixXd modes(n_seeds, d);

  auto iterate = [&](int s) {
    Eigen::VectorXd center = seeds.row(s).transpose();
    for (int it = 0; it < max_iters; ++it) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
      int count = 0;
      for (int i = 0; i < m; ++i) {
        if ((x.row(i).transpose() - center).squaredNorm() <= bw2) {
          sum += x.row(i).transpose();
          ++count;
        }
      }
      if (count == 0) break;
      Eigen::VectorXd next = sum / count;
      double shift = (next - center).norm();
      center = next;
      if (shift < tol) break;
    }
    modes.row(s) = center.transpose();
  };
  if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (int s = 0; s < n_seeds; ++s) iterate(s);
  } else {
    for (int s = 0; s < n_seeds; ++s) iterate(s);
  }

  // merge modes within bandwidth / 2, in lexicographic mode order
  std::vector<int> mode_order = lex_order(modes);
  std::vector<Eigen::VectorXd> merged;
  for (int s : mode_order) {
    Eigen::VectorXd mo = modes.row(s).transpose();
    bool absorbed = false;
    for (const auto& existing : merged)
      if ((existing - mo).norm() < bandwidth * 0.5) {
        absorbed = true;
        break;
      }
    if (!absorbed) merged.push_back(mo);
  }

  ClusterResult result;
  result.modes.resize(merged.size(), d);
  for (size_t k = 0; k < merged.size(); ++k) result.modes.row(k) = merged[k].transpose();

  result.instance_ids.assign(m, 0);
  for (int i = 0; i < m; ++i) {
    int best = 0;
    double best_d = 1e300;
    for (size_t k = 0; k < merged.size(); ++k) {
      double dist = (embeddings.row(i).transpose() - merged[k]).squaredNorm();
      if (dist < best_d) {
        best_d = dist;
        best = static_cast<int>(k);
      }
    }
    result.instance_ids[i] = best + 1;
  }

  // drop modes that attracted no points so ids stay contiguous from 1
  std::vector<int> remap(merged.size() + 1, 0);
  for (int id : result.instance_ids) remap[id] = 1;
  int next = 0;
  std::vector<int> kept_modes;
  for (size_t k = 1; k <= merged.size(); ++k)
    if (remap[k]) {
      remap[k] = ++next;
      kept_modes.push_back(static_cast<int>(k - 1));
    }
  if (next != static_cast<int>(merged.size())) {
    Eigen::MatrixXd compact(next, d);
    for (int k = 0; k < next; ++k) compact.row(k) = result.modes.row(kept_modes[k]);
    result.modes = compact;
    for (int& id : result.instance_ids) id = remap[id];
  }
  return result;
}

}  // namespace graspmt
