#include "graspmt/model.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

#include "graspmt/clustering.hpp"

namespace graspmt {

// ---------- parameters ----------

Eigen::Index Params::count() const {
  Eigen::Index n = 0;
  for (const auto& [name, t] : tensors) n += t.size();
  return n;
}

Eigen::VectorXd Params::flatten() const {
  Eigen::VectorXd flat(count());
  Eigen::Index at = 0;
  for (const auto& [name, t] : tensors) {
    std::memcpy(flat.data() + at, t.data(), sizeof(double) * t.size());
    at += t.size();
  }
  return flat;
}

void Params::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != count()) throw std::invalid_argument("Params::unflatten: size mismatch");
  Eigen::Index at = 0;
  for (auto& [name, t] : tensors) {
    std::memcpy(t.data(), flat.data() + at, sizeof(double) * t.size());
    at += t.size();
  }
}

void Params::set_zero() {
  for (auto& [name, t] : tensors) t.setZero();
}

static void add_linear(Params& p, const std::string& name, int out, int in) {
  p.tensors[name + "_w"] = Eigen::MatrixXd::Zero(out, in);
  p.tensors[name + "_b"] = Eigen::MatrixXd::Zero(out, 1);
}

static Params make_param_shapes(const ModelConfig& c) {
  Params p;
  add_linear(p, "stem1", c.stem_hidden, c.in_channels);
  add_linear(p, "stem2", c.stem_out, c.stem_hidden);
  add_linear(p, "sa1", c.sa1_out, c.stem_out + 3);
  add_linear(p, "sa2", c.sa2_out, c.sa1_out + 3);
  add_linear(p, "fp1", c.fp1_out, c.sa2_out + c.sa1_out);
  add_linear(p, "fp0", c.fp0_out, c.fp1_out + c.stem_out);
  add_linear(p, "head_seg1", c.head_hidden, c.fp0_out);
  add_linear(p, "head_seg2", ModelConfig::kSegOut, c.head_hidden);
  add_linear(p, "head_grasp1", c.head_hidden, c.fp0_out);
  add_linear(p, "head_grasp2", ModelConfig::kGraspOut, c.head_hidden);
  add_linear(p, "head_coll1", c.head_hidden, c.fp0_out);
  add_linear(p, "head_coll2", ModelConfig::kCollOut, c.head_hidden);
  return p;
}

Params init_params(const ModelConfig& config, uint64_t seed) {
  Params p = make_param_shapes(config);
  Rng rng(seed ^ 0x6A09E667F3BCC909ull);
  for (auto& [name, t] : p.tensors) {
    if (name.size() > 2 && name.substr(name.size() - 2) == "_b") continue;  // biases stay zero
    double s = std::sqrt(1.0 / static_cast<double>(t.cols()));
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = rng.uniform(-s, s);
  }
  return p;
}

// ---------- forward ----------

namespace {

std::vector<int> lex_order(const Eigen::MatrixX3d& pos) {
  std::vector<int> order(pos.rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&pos](int a, int b) {
    if (pos(a, 0) != pos(b, 0)) return pos(a, 0) < pos(b, 0);
    if (pos(a, 1) != pos(b, 1)) return pos(a, 1) < pos(b, 1);
    return pos(a, 2) < pos(b, 2);
  });
  return order;
}

Eigen::MatrixXd linear(const Eigen::MatrixXd& x, const Params& p, const std::string& name) {
  const Eigen::MatrixXd& w = p.tensors.at(name + "_w");
  const Eigen::MatrixXd& b = p.tensors.at(name + "_b");
  return (x * w.transpose()).rowwise() + b.col(0).transpose();
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

Grouping build_grouping(const Eigen::MatrixX3d& pos, int stride, double radius, int cap) {
  Grouping g;
  const int n = static_cast<int>(pos.rows());
  for (int i = 0; i < n; i += stride) g.centroids.push_back(i);
  SpatialGrid grid(pos, radius);

  g.offsets.push_back(0);
  std::vector<std::vector<int>> lists(g.centroids.size());
#pragma omp parallel for schedule(static)
  for (int c = 0; c < static_cast<int>(g.centroids.size()); ++c) {
    Vec3 center = pos.row(g.centroids[c]).transpose();
    std::vector<int> nbrs = grid.radius_neighbors(center, radius);
    if (static_cast<int>(nbrs.size()) > cap) {
      std::vector<std::pair<double, int>> ranked;
      ranked.reserve(nbrs.size());
      for (int i : nbrs)
        ranked.emplace_back((pos.row(i).transpose() - center).squaredNorm(), i);
      std::sort(ranked.begin(), ranked.end());
      nbrs.clear();
      for (int i = 0; i < cap; ++i) nbrs.push_back(ranked[i].second);
      std::sort(nbrs.begin(), nbrs.end());
    }
    if (nbrs.empty()) nbrs.push_back(g.centroids[c]);  // at least the centroid itself
    lists[c] = std::move(nbrs);
  }
  for (const auto& l : lists) {
    g.neighbors.insert(g.neighbors.end(), l.begin(), l.end());
    g.offsets.push_back(static_cast<int>(g.neighbors.size()));
  }
  g.relpos.resize(g.neighbors.size(), 3);
  for (size_t c = 0; c < g.centroids.size(); ++c) {
    Vec3 center = pos.row(g.centroids[c]).transpose();
    for (int p = g.offsets[c]; p < g.offsets[c + 1]; ++p)
      g.relpos.row(p) = ((pos.row(g.neighbors[p]).transpose() - center) / radius).transpose();
  }
  return g;
}

Interp build_interp(const Eigen::MatrixX3d& targets, const Eigen::MatrixX3d& coarse, int k) {
  const int n = static_cast<int>(targets.rows());
  const int m = static_cast<int>(coarse.rows());
  k = std::min(k, m);
  Interp itp;
  itp.indices.resize(n, k);
  itp.weights.resize(n, k);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> ranked(m);
    for (int j = 0; j < m; ++j)
      ranked[j] = {(coarse.row(j) - targets.row(i)).squaredNorm(), j};
    std::partial_sort(ranked.begin(), ranked.begin() + k, ranked.end());
    double wsum = 0.0;
    for (int a = 0; a < k; ++a) {
      double w = 1.0 / std::max(std::sqrt(ranked[a].first), 1e-9);
      itp.indices(i, a) = ranked[a].second;
      itp.weights(i, a) = w;
      wsum += w;
    }
    itp.weights.row(i) /= wsum;
  }
  return itp;
}

Eigen::MatrixXd interp_apply(const Interp& itp, const Eigen::MatrixXd& src) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(itp.indices.rows(), src.cols());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < itp.indices.rows(); ++i)
    for (int a = 0; a < itp.indices.cols(); ++a)
      out.row(i) += itp.weights(i, a) * src.row(itp.indices(i, a));
  return out;
}

void interp_backward(const Interp& itp, const Eigen::MatrixXd& d_out, Eigen::MatrixXd& d_src) {
  for (int i = 0; i < itp.indices.rows(); ++i)
    for (int a = 0; a < itp.indices.cols(); ++a)
      d_src.row(itp.indices(i, a)) += itp.weights(i, a) * d_out.row(i);
}

// pair-level inputs for one abstraction stage: [source features, relpos]
Eigen::MatrixXd gather_pairs(const Grouping& g, const Eigen::MatrixXd& src) {
  Eigen::MatrixXd a(g.neighbors.size(), src.cols() + 3);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < static_cast<int>(g.neighbors.size()); ++p) {
    a.block(p, 0, 1, src.cols()) = src.row(g.neighbors[p]);
    a.block(p, src.cols(), 1, 3) = g.relpos.row(p);
  }
  return a;
}

Eigen::MatrixXd segment_mean(const Grouping& g, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(g.centroids.size(), y.cols());
#pragma omp parallel for schedule(static)
  for (int c = 0; c < static_cast<int>(g.centroids.size()); ++c) {
    for (int p = g.offsets[c]; p < g.offsets[c + 1]; ++p) pooled.row(c) += y.row(p);
    pooled.row(c) /= (g.offsets[c + 1] - g.offsets[c]);
  }
  return pooled;
}

}  // namespace

HeadOutputs forward(const Eigen::MatrixXd& features, const Eigen::MatrixX3d& positions,
                    const Params& params, const ModelConfig& cfg, ForwardCache* cache) {
  const int n = static_cast<int>(features.rows());
  if (positions.rows() != n || features.cols() != cfg.in_channels)
    throw std::invalid_argument("forward: input shape mismatch");
  for (Eigen::Index i = 0; i < features.size(); ++i)
    if (!std::isfinite(features.data()[i])) throw std::invalid_argument("forward: non-finite input");

  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;

  cc.perm = lex_order(positions);
  cc.inv_perm.assign(n, 0);
  for (int i = 0; i < n; ++i) cc.inv_perm[cc.perm[i]] = i;

  Eigen::MatrixX3d pos(n, 3);
  cc.x.resize(n, features.cols());
  for (int i = 0; i < n; ++i) {
    pos.row(i) = positions.row(cc.perm[i]);
    cc.x.row(i) = features.row(cc.perm[i]);
  }

  // shared stem
  cc.z0a = linear(cc.x, params, "stem1");
  cc.f0a = relu(cc.z0a);
  cc.z0b = linear(cc.f0a, params, "stem2");
  cc.f0 = relu(cc.z0b);

  // abstraction stage 1
  cc.g1 = build_grouping(pos, cfg.sa1_stride, cfg.sa1_radius, cfg.knn_cap);
  cc.a1 = gather_pairs(cc.g1, cc.f0);
  cc.z1 = linear(cc.a1, params, "sa1");
  cc.y1 = relu(cc.z1);
  cc.f1 = segment_mean(cc.g1, cc.y1);
  Eigen::MatrixX3d pos1(cc.g1.centroids.size(), 3);
  for (size_t c = 0; c < cc.g1.centroids.size(); ++c) pos1.row(c) = pos.row(cc.g1.centroids[c]);

  // abstraction stage 2
  cc.g2 = build_grouping(pos1, cfg.sa2_stride, cfg.sa2_radius, cfg.knn_cap);
  cc.a2 = gather_pairs(cc.g2, cc.f1);
  cc.z2 = linear(cc.a2, params, "sa2");
  cc.y2 = relu(cc.z2);
  cc.f2 = segment_mean(cc.g2, cc.y2);
  Eigen::MatrixX3d pos2(cc.g2.centroids.size(), 3);
  for (size_t c = 0; c < cc.g2.centroids.size(); ++c) pos2.row(c) = pos1.row(cc.g2.centroids[c]);

  // propagation back to stage-1 resolution
  cc.i1 = build_interp(pos1, pos2, cfg.interp_k);
  Eigen::MatrixXd up2 = interp_apply(cc.i1, cc.f2);
  cc.c1.resize(pos1.rows(), up2.cols() + cc.f1.cols());
  cc.c1 << up2, cc.f1;
  cc.zf1 = linear(cc.c1, params, "fp1");
  cc.e1 = relu(cc.zf1);

  // propagation back to full resolution
  cc.i0 = build_interp(pos, pos1, cfg.interp_k);
  Eigen::MatrixXd up1 = interp_apply(cc.i0, cc.e1);
  cc.c0.resize(n, up1.cols() + cc.f0.cols());
  cc.c0 << up1, cc.f0;
  cc.zf0 = linear(cc.c0, params, "fp0");
  cc.h = relu(cc.zf0);

  // three parallel decoder heads
  const char* head_names[3] = {"head_seg", "head_grasp", "head_coll"};
  Eigen::MatrixXd outs[3];
  for (int k = 0; k < 3; ++k) {
    cc.zh[k] = linear(cc.h, params, std::string(head_names[k]) + "1");
    cc.ah[k] = relu(cc.zh[k]);
    outs[k] = linear(cc.ah[k], params, std::string(head_names[k]) + "2");
  }

  HeadOutputs heads;
  heads.seg.resize(n, ModelConfig::kSegOut);
  heads.grasp.resize(n, ModelConfig::kGraspOut);
  heads.coll.resize(n, ModelConfig::kCollOut);
  for (int i = 0; i < n; ++i) {
    heads.seg.row(cc.perm[i]) = outs[0].row(i);
    heads.grasp.row(cc.perm[i]) = outs[1].row(i);
    heads.coll.row(cc.perm[i]) = outs[2].row(i);
  }
  return heads;
}

// ---------- backward ----------

namespace {

struct LinearGrads {
  Eigen::MatrixXd dx;
};

// accumulates dW/db into grads and returns dX
Eigen::MatrixXd linear_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& d_out,
                                const Params& p, Params& grads, const std::string& name) {
  grads.tensors.at(name + "_w") += d_out.transpose() * x;
  grads.tensors.at(name + "_b").col(0) += d_out.colwise().sum().transpose();
  return d_out * p.tensors.at(name + "_w");
}

Eigen::MatrixXd relu_backward(const Eigen::MatrixXd& z, const Eigen::MatrixXd& d_out) {
  return (z.array() > 0.0).cast<double>() * d_out.array();
}

}  // namespace

Params backward(const ForwardCache& cc, const Params& params, const ModelConfig& cfg,
                const Eigen::MatrixXd& d_seg, const Eigen::MatrixXd& d_grasp,
                const Eigen::MatrixXd& d_coll) {
  Params grads = make_param_shapes(cfg);
  const int n = static_cast<int>(cc.x.rows());

  // sort incoming head gradients into the internal order
  Eigen::MatrixXd d_outs[3] = {Eigen::MatrixXd(n, d_seg.cols()),
                               Eigen::MatrixXd(n, d_grasp.cols()),
                               Eigen::MatrixXd(n, d_coll.cols())};
  for (int i = 0; i < n; ++i) {
    d_outs[0].row(i) = d_seg.row(cc.perm[i]);
    d_outs[1].row(i) = d_grasp.row(cc.perm[i]);
    d_outs[2].row(i) = d_coll.row(cc.perm[i]);
  }

  const char* head_names[3] = {"head_seg", "head_grasp", "head_coll"};
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(n, cfg.fp0_out);
  for (int k = 0; k < 3; ++k) {
    std::string h1 = std::string(head_names[k]) + "1", h2 = std::string(head_names[k]) + "2";
    Eigen::MatrixXd dah = linear_backward(cc.ah[k], d_outs[k], params, grads, h2);
    Eigen::MatrixXd dzh = relu_backward(cc.zh[k], dah);
    dh += linear_backward(cc.h, dzh, params, grads, h1);
  }

  // fp0
  Eigen::MatrixXd dzf0 = relu_backward(cc.zf0, dh);
  Eigen::MatrixXd dc0 = linear_backward(cc.c0, dzf0, params, grads, "fp0");
  Eigen::MatrixXd dup1 = dc0.leftCols(cfg.fp1_out);
  Eigen::MatrixXd df0 = dc0.rightCols(cfg.stem_out);

  // fp1
  Eigen::MatrixXd de1 = Eigen::MatrixXd::Zero(cc.e1.rows(), cc.e1.cols());
  interp_backward(cc.i0, dup1, de1);
  Eigen::MatrixXd dzf1 = relu_backward(cc.zf1, de1);
  Eigen::MatrixXd dc1 = linear_backward(cc.c1, dzf1, params, grads, "fp1");
  Eigen::MatrixXd dup2 = dc1.leftCols(cfg.sa2_out);
  Eigen::MatrixXd df1 = dc1.rightCols(cfg.sa1_out);

  // sa2
  Eigen::MatrixXd df2 = Eigen::MatrixXd::Zero(cc.f2.rows(), cc.f2.cols());
  interp_backward(cc.i1, dup2, df2);
  {
    Eigen::MatrixXd dy2(cc.y2.rows(), cc.y2.cols());
    for (size_t c = 0; c < cc.g2.centroids.size(); ++c) {
      double inv = 1.0 / (cc.g2.offsets[c + 1] - cc.g2.offsets[c]);
      for (int p = cc.g2.offsets[c]; p < cc.g2.offsets[c + 1]; ++p)
        dy2.row(p) = inv * df2.row(c);
    }
    Eigen::MatrixXd dz2 = relu_backward(cc.z2, dy2);
    Eigen::MatrixXd da2 = linear_backward(cc.a2, dz2, params, grads, "sa2");
    for (size_t p = 0; p < cc.g2.neighbors.size(); ++p)
      df1.row(cc.g2.neighbors[p]) += da2.block(p, 0, 1, cfg.sa1_out);
  }

  // sa1
  {
    Eigen::MatrixXd dy1(cc.y1.rows(), cc.y1.cols());
    for (size_t c = 0; c < cc.g1.centroids.size(); ++c) {
      double inv = 1.0 / (cc.g1.offsets[c + 1] - cc.g1.offsets[c]);
      for (int p = cc.g1.offsets[c]; p < cc.g1.offsets[c + 1]; ++p)
        dy1.row(p) = inv * df1.row(c);
    }
    Eigen::MatrixXd dz1 = relu_backward(cc.z1, dy1);
    Eigen::MatrixXd da1 = linear_backward(cc.a1, dz1, params, grads, "sa1");
    for (size_t p = 0; p < cc.g1.neighbors.size(); ++p)
      df0.row(cc.g1.neighbors[p]) += da1.block(p, 0, 1, cfg.stem_out);
  }

  // stem
  Eigen::MatrixXd dz0b = relu_backward(cc.z0b, df0);
  Eigen::MatrixXd df0a = linear_backward(cc.f0a, dz0b, params, grads, "stem2");
  Eigen::MatrixXd dz0a = relu_backward(cc.z0a, df0a);
  linear_backward(cc.x, dz0a, params, grads, "stem1");
  return grads;
}

// ---------- loss assembly ----------

LossBreakdown compute_losses(const PointCloud& cloud, const SceneLabels& labels,
                             const HeadOutputs& heads, const LossWeights& weights,
                             const BranchToggles& toggles, Eigen::MatrixXd* d_seg,
                             Eigen::MatrixXd* d_grasp, Eigen::MatrixXd* d_coll) {
  const int n = static_cast<int>(cloud.size());
  LossBreakdown out;
  if (d_seg) d_seg->setZero(n, ModelConfig::kSegOut);
  if (d_grasp) d_grasp->setZero(n, ModelConfig::kGraspOut);
  if (d_coll) d_coll->setZero(n, ModelConfig::kCollOut);

  if (toggles.segmentation) {
    std::vector<int> sem_labels(cloud.semantic.begin(), cloud.semantic.end());
    ScalarWithGrad sem = loss_sem(heads.seg.leftCols(2), sem_labels);
    out.sem = sem.value;
    if (d_seg) d_seg->leftCols(2) += sem.grad;

    std::vector<int> fg_rows, fg_ids;
    for (int i = 0; i < n; ++i)
      if (cloud.semantic[i] == 1) {
        fg_rows.push_back(i);
        fg_ids.push_back(cloud.instance_ids[i]);
      }
    if (!fg_rows.empty()) {
      Eigen::MatrixXd emb(fg_rows.size(), ModelConfig::kEmbeddingDim);
      for (size_t r = 0; r < fg_rows.size(); ++r)
        emb.row(r) = heads.seg.row(fg_rows[r]).rightCols(ModelConfig::kEmbeddingDim);
      ScalarWithGrad ins = loss_ins(emb, fg_ids, weights);
      out.ins = ins.value;
      if (d_seg)
        for (size_t r = 0; r < fg_rows.size(); ++r)
          d_seg->row(fg_rows[r]).rightCols(ModelConfig::kEmbeddingDim) += ins.grad.row(r);
    }
  }

  if (toggles.grasp) {
    bool any_active = false;
    for (int i = 0; i < n; ++i)
      if (!labels.ignore[i]) any_active = true;
    if (any_active) {
      std::vector<int> gp_labels(labels.graspable.begin(), labels.graspable.end());
      ScalarWithGrad gp = loss_gp(heads.grasp.leftCols(2), gp_labels, labels.ignore, weights);
      out.gp = gp.value;
      if (d_grasp) d_grasp->leftCols(2) += gp.grad;
    }

    std::vector<int> rows;
    for (int i = 0; i < n; ++i)
      if (labels.graspable[i] && labels.grasp_index[i] >= 0) rows.push_back(i);
    if (!rows.empty()) {
      const int m = static_cast<int>(rows.size());
      Eigen::MatrixXd pa(m, 3), pc(m, 3), ta(m, 3), tc(m, 3);
      Eigen::VectorXd pw(m), pd(m), ps(m), tw(m), td(m), ts(m);
      for (int r = 0; r < m; ++r) {
        int i = rows[r];
        const Grasp& g = labels.grasps[labels.grasp_index[i]];
        pa.row(r) = heads.grasp.row(i).segment(2, 3);
        pc.row(r) = heads.grasp.row(i).segment(5, 3);
        ta.row(r) = g.approach.transpose();
        tc.row(r) = g.closing.transpose();
        pd(r) = heads.grasp(i, 8);
        pw(r) = heads.grasp(i, 9);
        ps(r) = heads.grasp(i, 10);
        td(r) = g.depth;
        tw(r) = g.width;
        ts(r) = g.score;
      }
      RotLoss rot = loss_rot(pa, pc, ta, tc, weights);
      RegressionLoss reg = loss_regression(pw, pd, ps, tw, td, ts, weights);
      out.rot = rot.value;
      out.reg = reg.value;
      if (d_grasp)
        for (int r = 0; r < m; ++r) {
          int i = rows[r];
          d_grasp->row(i).segment(2, 3) += rot.grad_approach.row(r);
          d_grasp->row(i).segment(5, 3) += rot.grad_closing.row(r);
          (*d_grasp)(i, 8) += reg.grad_depth(r);
          (*d_grasp)(i, 9) += reg.grad_width(r);
          (*d_grasp)(i, 10) += reg.grad_score(r);
        }
    }
  }

  if (toggles.collision) {
    std::vector<int> rows;
    for (int i = 0; i < n; ++i)
      if (labels.coll_valid[i]) rows.push_back(i);
    if (!rows.empty()) {
      Eigen::MatrixXd logits(rows.size(), 2);
      std::vector<int> cl(rows.size());
      for (size_t r = 0; r < rows.size(); ++r) {
        logits.row(r) = heads.coll.row(rows[r]);
        cl[r] = labels.coll_label[rows[r]];
      }
      // normalize the summed CE by the labeled-point count to keep branch
      // magnitudes comparable at training time
      ScalarWithGrad coll = loss_coll(logits, cl);
      double scale = weights.coll_weight / rows.size();
      out.coll = coll.value * scale;
      if (d_coll)
        for (size_t r = 0; r < rows.size(); ++r)
          d_coll->row(rows[r]) += coll.grad.row(r) * scale;
    }
  }

  out.total = out.sem + out.ins + out.gp + out.rot + out.reg + out.coll;
  return out;
}

// ---------- training ----------

TrainConfig TrainConfig::reference_preset() {
  TrainConfig c;
  c.epochs = 80;
  c.lr = 0.05;
  c.decay = 0.5;
  c.decay_period = 10;
  c.batch_size = 64;
  return c;
}

Checkpoint train(const std::vector<TrainingExample>& dataset, const ModelConfig& model_config,
                 const TrainConfig& config, const Params* warm_start) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  Checkpoint ckpt;
  ckpt.model = model_config;
  ckpt.train = config;
  ckpt.params = warm_start ? *warm_start : init_params(model_config, config.seed);

  const Eigen::Index np = ckpt.params.count();
  Eigen::VectorXd theta = ckpt.params.flatten();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(np), v = Eigen::VectorXd::Zero(np);
  int64_t step = 0;

  Rng rng(config.seed ^ 0xBB67AE8584CAA73Bull);
  std::vector<int> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double lr = config.lr * std::pow(config.decay, epoch / config.decay_period);
    // seeded shuffle
    for (size_t i = 0; i + 1 < order.size(); ++i) {
      size_t j = i + rng.index(order.size() - i);
      std::swap(order[i], order[j]);
    }

    double epoch_loss = 0.0;
    size_t cursor = 0;
    while (cursor < order.size()) {
      size_t batch_end = std::min(cursor + config.batch_size, order.size());
      // batch items are independent; gradients are reduced in index order so
      // the result does not depend on thread scheduling
      const int batch_n = static_cast<int>(batch_end - cursor);
      std::vector<Params> grads(batch_n);
      std::vector<double> losses(batch_n);
#pragma omp parallel for schedule(dynamic, 1)
      for (int b = 0; b < batch_n; ++b) {
        const TrainingExample& ex = dataset[order[cursor + b]];
        ForwardCache cache;
        HeadOutputs heads =
            forward(ex.cloud.features(), ex.cloud.points, ckpt.params, model_config, &cache);
        Eigen::MatrixXd d_seg, d_grasp, d_coll;
        LossBreakdown loss = compute_losses(ex.cloud, ex.labels, heads, config.loss,
                                            config.toggles, &d_seg, &d_grasp, &d_coll);
        losses[b] = loss.total;
        grads[b] = backward(cache, ckpt.params, model_config, d_seg, d_grasp, d_coll);
      }
      Params grad_sum = make_param_shapes(model_config);
      for (int b = 0; b < batch_n; ++b) {
        if (!std::isfinite(losses[b]))
          throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                   std::to_string(epoch));
        epoch_loss += losses[b];
        for (auto& [name, t] : grad_sum.tensors) t += grads[b].tensors.at(name);
      }

      // Adam step on the batch-mean gradient
      ++step;
      Params grad_mean = grad_sum;
      for (auto& [name, t] : grad_mean.tensors) t /= batch_n;
      Eigen::VectorXd g = grad_mean.flatten();
      m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * g;
      v = config.adam_beta2 * v.array().matrix() +
          (1.0 - config.adam_beta2) * g.array().square().matrix();
      double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(step));
      double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(step));
      theta.array() -= lr * (m.array() / bc1) /
                       ((v.array() / bc2).sqrt() + config.adam_eps);
      ckpt.params.unflatten(theta);
      cursor = batch_end;
    }
    ckpt.loss_history.push_back(epoch_loss / dataset.size());
  }
  return ckpt;
}

// ---------- checkpoint I/O ----------

namespace {

constexpr char kMagic[8] = {'G', 'M', 'T', 'C', 'K', '0', '0', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  os.write(kMagic, 8);
  put<int32_t>(os, 1);  // version

  const ModelConfig& mc = ckpt.model;
  for (int v : {mc.in_channels, mc.stem_hidden, mc.stem_out, mc.sa1_out, mc.sa2_out, mc.fp1_out,
                mc.fp0_out, mc.head_hidden, mc.sa1_stride, mc.sa2_stride, mc.knn_cap, mc.interp_k})
    put<int32_t>(os, v);
  put<double>(os, mc.sa1_radius);
  put<double>(os, mc.sa2_radius);

  const TrainConfig& tc = ckpt.train;
  put<int32_t>(os, tc.epochs);
  put<double>(os, tc.lr);
  put<double>(os, tc.decay);
  put<int32_t>(os, tc.decay_period);
  put<int32_t>(os, tc.batch_size);
  put<uint64_t>(os, tc.seed);

  put<int32_t>(os, static_cast<int32_t>(ckpt.params.tensors.size()));
  for (const auto& [name, t] : ckpt.params.tensors) {
    put<int32_t>(os, static_cast<int32_t>(name.size()));
    os.write(name.data(), name.size());
    put<int64_t>(os, t.rows());
    put<int64_t>(os, t.cols());
    os.write(reinterpret_cast<const char*>(t.data()), sizeof(double) * t.size());
  }

  put<int32_t>(os, static_cast<int32_t>(ckpt.loss_history.size()));
  for (double l : ckpt.loss_history) put<double>(os, l);
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic bytes: " + path);
  int32_t version = get<int32_t>(is);
  if (version != 1)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

  Checkpoint ckpt;
  ModelConfig& mc = ckpt.model;
  for (int* v : {&mc.in_channels, &mc.stem_hidden, &mc.stem_out, &mc.sa1_out, &mc.sa2_out,
                 &mc.fp1_out, &mc.fp0_out, &mc.head_hidden, &mc.sa1_stride, &mc.sa2_stride,
                 &mc.knn_cap, &mc.interp_k})
    *v = get<int32_t>(is);
  mc.sa1_radius = get<double>(is);
  mc.sa2_radius = get<double>(is);

  TrainConfig& tc = ckpt.train;
  tc.epochs = get<int32_t>(is);
  tc.lr = get<double>(is);
  tc.decay = get<double>(is);
  tc.decay_period = get<int32_t>(is);
  tc.batch_size = get<int32_t>(is);
  tc.seed = get<uint64_t>(is);

  int32_t n_tensors = get<int32_t>(is);
  for (int32_t i = 0; i < n_tensors; ++i) {
    int32_t len = get<int32_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    int64_t rows = get<int64_t>(is), cols = get<int64_t>(is);
    if (rows < 0 || cols < 0 || rows * cols > (1ll << 30))
      throw std::runtime_error("checkpoint: corrupt tensor header");
    Eigen::MatrixXd t(rows, cols);
    is.read(reinterpret_cast<char*>(t.data()), sizeof(double) * t.size());
    if (!is) throw std::runtime_error("checkpoint: truncated tensor data");
    ckpt.params.tensors[name] = std::move(t);
  }

  int32_t n_hist = get<int32_t>(is);
  for (int32_t i = 0; i < n_hist; ++i) ckpt.loss_history.push_back(get<double>(is));

  // structural validation against the stored config
  Params expected = make_param_shapes(mc);
  if (expected.tensors.size() != ckpt.params.tensors.size())
    throw std::runtime_error("checkpoint: tensor manifest does not match config");
  for (const auto& [name, t] : expected.tensors) {
    auto it = ckpt.params.tensors.find(name);
    if (it == ckpt.params.tensors.end() || it->second.rows() != t.rows() ||
        it->second.cols() != t.cols())
      throw std::runtime_error("checkpoint: tensor shape mismatch for " + name);
  }
  return ckpt;
}

// ---------- inference ----------

InferResult infer(const PointCloud& cloud, const Checkpoint& ckpt, const InferParams& ip) {
  InferResult result;
  result.heads = forward(cloud.features(), cloud.points, ckpt.params, ckpt.model);
  const int n = static_cast<int>(cloud.size());

  // predicted foreground mask + instance clustering over embeddings
  std::vector<int> fg_rows;
  for (int i = 0; i < n; ++i)
    if (result.heads.seg(i, 1) > result.heads.seg(i, 0)) fg_rows.push_back(i);

  result.instance_ids.assign(n, 0);
  if (!fg_rows.empty()) {
    Eigen::MatrixXd emb(fg_rows.size(), ModelConfig::kEmbeddingDim);
    for (size_t r = 0; r < fg_rows.size(); ++r)
      emb.row(r) = result.heads.seg.row(fg_rows[r]).rightCols(ModelConfig::kEmbeddingDim);
    ClusterResult clusters = meanshift(emb, ip.cluster_bandwidth);
    for (size_t r = 0; r < fg_rows.size(); ++r)
      result.instance_ids[fg_rows[r]] = clusters.instance_ids[r];
  }

  for (int i = 0; i < n; ++i) {
    if (result.instance_ids[i] == 0) continue;                       // background
    if (result.heads.grasp(i, 1) <= result.heads.grasp(i, 0)) continue;  // not graspable
    Vec3 va = result.heads.grasp.row(i).segment(2, 3).transpose();
    Vec3 vc = result.heads.grasp.row(i).segment(5, 3).transpose();
    if (va.norm() < 1e-9 || vc.norm() < 1e-9) continue;
    va.normalize();
    if (std::abs(va.dot(vc.normalized())) > 1.0 - 1e-6) continue;  // degenerate rotation
    double depth = std::clamp(result.heads.grasp(i, 8), 0.0, ip.gripper.finger_length);
    double width = std::clamp(result.heads.grasp(i, 9), 0.0, ip.gripper.max_width);
    double score = std::clamp(result.heads.grasp(i, 10), 0.0, 1.0);
    Vec3 center = cloud.points.row(i).transpose() + depth * va;
    Grasp g = make_grasp(center, va, vc, width, depth, score, ip.gripper,
                         result.instance_ids[i]);
    result.grasps.push_back(g);
    result.grasp_instances.push_back(result.instance_ids[i]);
    bool free = true;
    if (ip.use_collision_head) {
      double m = std::max(result.heads.coll(i, 0), result.heads.coll(i, 1));
      double p1 = std::exp(result.heads.coll(i, 1) - m);
      double p0 = std::exp(result.heads.coll(i, 0) - m);
      free = p1 / (p0 + p1) > ip.collision_threshold;
    }
    result.collision_free.push_back(free ? 1 : 0);
  }
  return result;
}

}  // namespace graspmt
