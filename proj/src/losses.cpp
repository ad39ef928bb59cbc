#include "ordproto/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ordproto/errors.hpp"

namespace ordproto {

void FeatureBatch::validate() const {
  if (labels.empty()) throw EmptyInputError("feature batch is empty");
  if (features.rows() != labels.size()) {
    throw DimMismatchError("feature batch: " + std::to_string(features.rows()) +
                           " feature rows vs " + std::to_string(labels.size()) + " labels");
  }
  if (features.cols() == 0) throw DimMismatchError("feature batch: zero feature dimension");
  for (int y : labels) {
    if (y < 1 || y > num_classes) {
      throw LabelOutOfRangeError("label " + std::to_string(y) + " outside 1.." +
                                 std::to_string(num_classes));
    }
  }
  if (!features.all_finite()) throw DimMismatchError("feature batch: non-finite entry");
}

int LocalPrototypes::num_present() const {
  return static_cast<int>(std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }));
}

DenseMatrix label_similarity(std::span<const int> labels) {
  if (labels.empty()) throw EmptyInputError("label_similarity: empty labels");
  const std::size_t n = labels.size();
  DenseMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) s(i, j) = neg_abs_distance(labels[i], labels[j]);
  }
  return s;
}

DenseMatrix feature_similarity(const DenseMatrix& points) {
  const std::size_t n = points.rows();
  DenseMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, i) = cosine_similarity(points.row(i), points.row(i));
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = cosine_similarity(points.row(i), points.row(j));
      s(i, j) = c;
      s(j, i) = c;
    }
  }
  return s;
}

RankMatchResult rank_match_loss(const DenseMatrix& target_sim, const DenseMatrix& feature_sim,
                                const BlackboxConfig& cfg) {
  const std::size_t n = target_sim.rows();
  if (n == 0 || target_sim.cols() != n || feature_sim.rows() != n || feature_sim.cols() != n) {
    throw DimMismatchError("rank_match_loss: similarity matrices must both be n x n");
  }
  RankMatchResult out{0.0, DenseMatrix(n, n)};
  const double scale = 1.0 / static_cast<double>(n);
  Vector upstream(n);
  for (std::size_t i = 0; i < n; ++i) {
    const RankVector rt = rank(target_sim.row(i));
    const RankVector rf = rank(feature_sim.row(i));
    double sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double diff = static_cast<double>(rt[j] - rf[j]);
      sq += diff * diff;
      upstream[j] = -2.0 * scale * diff;
    }
    out.value += scale * sq;
    const Vector g = blackbox_rank_backward(feature_sim.row(i), upstream, cfg);
    std::copy(g.begin(), g.end(), out.grad.row(i).begin());
  }
  return out;
}

DenseMatrix similarity_grad_to_points(const DenseMatrix& points, const DenseMatrix& sim_grad) {
  const std::size_t n = points.rows();
  if (sim_grad.rows() != n || sim_grad.cols() != n) {
    throw DimMismatchError("similarity_grad_to_points: gradient shape mismatch");
  }
  DenseMatrix out(n, points.cols());
  // Diagonal entries are the constant cos(z, z) = 1 and carry no gradient.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double g = sim_grad(i, j) + sim_grad(j, i);
      if (g == 0.0) continue;
      const CosineGrad cg = cosine_similarity_grad(points.row(i), points.row(j));
      auto gi = out.row(i);
      auto gj = out.row(j);
      for (std::size_t c = 0; c < points.cols(); ++c) {
        gi[c] += g * cg.wrt_u[c];
        gj[c] += g * cg.wrt_v[c];
      }
    }
  }
  return out;
}

LossBundle ins2ins_loss(const FeatureBatch& batch, const BlackboxConfig& cfg) {
  batch.validate();
  const DenseMatrix sy = label_similarity(batch.labels);
  const DenseMatrix sz = feature_similarity(batch.features);
  const RankMatchResult rm = rank_match_loss(sy, sz, cfg);
  return {rm.value, similarity_grad_to_points(batch.features, rm.grad)};
}

LocalPrototypes local_prototypes(const FeatureBatch& batch) {
  batch.validate();
  const std::size_t d = batch.dim();
  const auto k = static_cast<std::size_t>(batch.num_classes);
  LocalPrototypes p;
  p.per_class.assign(k, Vector{});
  p.counts.assign(k, 0);
  p.overall.assign(d, 0.0);
  std::vector<Vector> sums(k, Vector(d, 0.0));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto c = static_cast<std::size_t>(batch.labels[i] - 1);
    ++p.counts[c];
    const auto z = batch.features.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      sums[c][j] += z[j];
      p.overall[j] += z[j];
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (p.counts[c] == 0) continue;
    p.per_class[c] = std::move(sums[c]);
    for (double& x : p.per_class[c]) x /= p.counts[c];
  }
  for (double& x : p.overall) x /= static_cast<double>(batch.size());
  return p;
}

namespace {

void check_protos(const FeatureBatch& batch, const LocalPrototypes& protos) {
  if (protos.counts.size() != static_cast<std::size_t>(batch.num_classes) ||
      protos.overall.size() != batch.dim()) {
    throw DimMismatchError("prototypes do not match the batch");
  }
}

}  // namespace

LossBundle ins2cls_loss(const FeatureBatch& batch, const LocalPrototypes& protos) {
  batch.validate();
  check_protos(batch, protos);
  const std::size_t d = batch.dim();
  const double inv_d = 1.0 / static_cast<double>(d);
  LossBundle out{0.0, DenseMatrix(batch.size(), d)};
  // The mean-subtracted residuals of a class sum to zero, so the chain rule
  // through mu_k adds nothing beyond the direct term.
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Vector& mu = protos.of(batch.labels[i]);
    const auto z = batch.features.row(i);
    auto g = out.feature_grads.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double r = z[j] - mu[j];
      out.value += inv_d * r * r;
      g[j] = 2.0 * inv_d * r;
    }
  }
  return out;
}

namespace {

std::vector<int> present_classes(const LocalPrototypes& protos) {
  std::vector<int> out;
  for (std::size_t c = 0; c < protos.counts.size(); ++c) {
    if (protos.counts[c] > 0) out.push_back(static_cast<int>(c) + 1);
  }
  return out;
}

void require_two_classes(const LocalPrototypes& protos) {
  if (protos.num_present() < 2) {
    throw DegenerateBatchError("class-to-class loss needs at least two classes in the batch, got " +
                               std::to_string(protos.num_present()));
  }
}

}  // namespace

LossBundle cls2cls_dispersion_term(const FeatureBatch& batch, const LocalPrototypes& protos,
                                   const Cls2ClsOptions& opts) {
  batch.validate();
  check_protos(batch, protos);
  require_two_classes(protos);
  const std::size_t d = batch.dim();
  double scatter = 0.0;
  for (int cls : present_classes(protos)) {
    const Vector& mu = protos.of(cls);
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double r = mu[j] - protos.overall[j];
      sq += r * r;
    }
    scatter += protos.counts[cls - 1] * sq;
  }
  const double denom = scatter + opts.eps;
  LossBundle out{static_cast<double>(d) / denom, DenseMatrix(batch.size(), d)};
  if (opts.detach_dispersion) return out;
  // d(scatter)/d(z_i) = 2 (mu_{y_i} - mu_bar); the mu_bar path cancels because
  // the count-weighted displacements sum to zero.
  const double coef = -static_cast<double>(d) / (denom * denom);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Vector& mu = protos.of(batch.labels[i]);
    auto g = out.feature_grads.row(i);
    for (std::size_t j = 0; j < d; ++j) g[j] = coef * 2.0 * (mu[j] - protos.overall[j]);
  }
  return out;
}

LossBundle cls2cls_ordinal_term(const FeatureBatch& batch, const LocalPrototypes& protos,
                                std::span<const int> prior_labels, const Cls2ClsOptions& opts) {
  batch.validate();
  check_protos(batch, protos);
  require_two_classes(protos);
  if (prior_labels.size() != static_cast<std::size_t>(batch.num_classes)) {
    throw DimMismatchError("prior labels must have one entry per class");
  }
  const std::vector<int> classes = present_classes(protos);
  std::vector<int> prior;
  std::vector<Vector> mus;
  for (int cls : classes) {
    prior.push_back(prior_labels[cls - 1]);
    mus.push_back(protos.of(cls));
  }
  const DenseMatrix points = DenseMatrix::from_rows(mus);
  const RankMatchResult rm =
      rank_match_loss(label_similarity(prior), feature_similarity(points), opts.blackbox);
  const DenseMatrix proto_grads = similarity_grad_to_points(points, rm.grad);

  std::vector<int> slot(static_cast<std::size_t>(batch.num_classes), -1);
  for (std::size_t s = 0; s < classes.size(); ++s) slot[classes[s] - 1] = static_cast<int>(s);
  LossBundle out{rm.value, DenseMatrix(batch.size(), batch.dim())};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int cls = batch.labels[i];
    const auto pg = proto_grads.row(static_cast<std::size_t>(slot[cls - 1]));
    const double share = 1.0 / protos.counts[cls - 1];
    auto g = out.feature_grads.row(i);
    for (std::size_t j = 0; j < batch.dim(); ++j) g[j] = share * pg[j];
  }
  return out;
}

LossBundle cls2cls_loss(const FeatureBatch& batch, const LocalPrototypes& protos,
                        std::span<const int> prior_labels, const Cls2ClsOptions& opts) {
  LossBundle out = cls2cls_dispersion_term(batch, protos, opts);
  const LossBundle ord = cls2cls_ordinal_term(batch, protos, prior_labels, opts);
  out.value += ord.value;
  out.feature_grads += ord.feature_grads;
  return out;
}

HybridLoss hybrid_ordinal_loss(const FeatureBatch& batch, const HybridOptions& opts) {
  batch.validate();
  HybridLoss out;
  out.total.feature_grads = DenseMatrix(batch.size(), batch.dim());
  if (opts.switches.ins2ins) {
    const LossBundle b = ins2ins_loss(batch, opts.cls2cls.blackbox);
    out.ins2ins = b.value;
    out.total.feature_grads += b.feature_grads;
  }
  if (opts.switches.ins2cls || opts.switches.cls2cls) {
    const LocalPrototypes protos = local_prototypes(batch);
    if (opts.switches.ins2cls) {
      const LossBundle b = ins2cls_loss(batch, protos);
      out.ins2cls = b.value;
      out.total.feature_grads += b.feature_grads;
    }
    if (opts.switches.cls2cls) {
      std::vector<int> prior = opts.prior_labels;
      if (prior.empty()) {
        prior.resize(static_cast<std::size_t>(batch.num_classes));
        std::iota(prior.begin(), prior.end(), 1);
      }
      const LossBundle b = cls2cls_loss(batch, protos, prior, opts.cls2cls);
      out.cls2cls = b.value;
      out.total.feature_grads += b.feature_grads;
    }
  }
  out.total.value = out.ins2ins + out.ins2cls + out.cls2cls;
  return out;
}

LogitBundle cross_entropy_loss(const DenseMatrix& logits, std::span<const int> labels) {
  const std::size_t m = logits.rows();
  const std::size_t k = logits.cols();
  if (m == 0) throw EmptyInputError("cross_entropy_loss: empty batch");
  if (labels.size() != m) throw DimMismatchError("cross_entropy_loss: label count mismatch");
  LogitBundle out{0.0, DenseMatrix(m, k)};
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const int y = labels[i];
    if (y < 1 || static_cast<std::size_t>(y) > k) {
      throw LabelOutOfRangeError("cross_entropy_loss: label " + std::to_string(y) +
                                 " outside 1.." + std::to_string(k));
    }
    const auto row = logits.row(i);
    const auto top = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    double rest = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (c != top) rest += std::exp(row[c] - row[top]);
    }
    // log-sum-exp - logit_y, with log1p keeping saturated rows accurate.
    out.value += inv_m * ((row[top] - row[static_cast<std::size_t>(y - 1)]) + std::log1p(rest));
    const Vector p = softmax(row);
    auto g = out.logit_grads.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      g[c] = inv_m * (p[c] - (c == static_cast<std::size_t>(y - 1) ? 1.0 : 0.0));
    }
  }
  return out;
}

TotalLoss total_loss(const LogitBundle& ce, const LossBundle& hyb, double lambda_hyb) {
  TotalLoss out{ce.value + lambda_hyb * hyb.value, hyb.feature_grads, ce.logit_grads};
  out.feature_grads *= lambda_hyb;
  return out;
}

}  // namespace ordproto
