#pragma once

#include "graspmt/common.hpp"

namespace graspmt {

struct ClusterResult {
  std::vector<int> instance_ids;  // per input row, contiguous from 1
  Eigen::MatrixXd modes;          // one row per cluster
};

/// Flat-kernel mean shift over M x D embeddings. Seeds come from a
/// grid-binned subsample (bin = bandwidth / 2); each seed iterates to the
/// mean of its bandwidth neighborhood, converged modes within bandwidth / 2
/// are merged and every point is assigned to its nearest mode. The result is
/// invariant to input row order up to id relabeling.
ClusterResult meanshift(const Eigen::MatrixXd& embeddings, double bandwidth, int max_iters = 100,
                        double tol = 1e-4, ExecMode mode = ExecMode::Parallel);

}  // namespace graspmt
