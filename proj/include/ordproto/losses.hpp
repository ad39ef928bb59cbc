#pragma once

#include <span>
#include <vector>

#include "ordproto/linalg.hpp"
#include "ordproto/ranking.hpp"

namespace ordproto {

// A mini-batch of features with coarse ordinal labels in 1..num_classes.
struct FeatureBatch {
  DenseMatrix features;     // M x d, one feature vector per row
  std::vector<int> labels;  // length M
  int num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }

  // Throws EmptyInputError / DimMismatchError / LabelOutOfRangeError.
  void validate() const;
};

// Per-class batch means plus the overall batch mean. Classes are 1-based in
// the API; storage is 0-based.
struct LocalPrototypes {
  std::vector<Vector> per_class;  // size K; empty vector for absent classes
  std::vector<int> counts;        // size K
  Vector overall;

  bool present(int cls) const { return counts.at(cls - 1) > 0; }
  const Vector& of(int cls) const { return per_class.at(cls - 1); }
  int num_present() const;
};

struct LossBundle {
  double value = 0.0;
  DenseMatrix feature_grads;  // M x d, d(value)/d(z_i)
};

struct LogitBundle {
  double value = 0.0;
  DenseMatrix logit_grads;  // M x K
};

struct TotalLoss {
  double value = 0.0;
  DenseMatrix feature_grads;
  DenseMatrix logit_grads;
};

// S^y: entry (i, j) = -|y_i - y_j|.
DenseMatrix label_similarity(std::span<const int> labels);

// S^z: entry (i, j) = cosine(z_i, z_j) over the rows of `points`.
DenseMatrix feature_similarity(const DenseMatrix& points);

struct RankMatchResult {
  double value = 0.0;
  DenseMatrix grad;  // interpolated d(value)/d(feature_sim)
};

// (1/n) sum_i |R(target row i) - R(feature row i)|^2 with the blackbox
// gradient taken through each feature row. Target ranks are constants.
RankMatchResult rank_match_loss(const DenseMatrix& target_sim, const DenseMatrix& feature_sim,
                                const BlackboxConfig& cfg);

// Chains a gradient with respect to a cosine similarity matrix of `points`
// back onto the points themselves.
DenseMatrix similarity_grad_to_points(const DenseMatrix& points, const DenseMatrix& sim_grad);

// Instance-to-instance ordinality.
LossBundle ins2ins_loss(const FeatureBatch& batch, const BlackboxConfig& cfg);

LocalPrototypes local_prototypes(const FeatureBatch& batch);

// Instance-to-class compactness: (1/d) sum_k sum_{i in k} |z_i - mu_k|^2.
LossBundle ins2cls_loss(const FeatureBatch& batch, const LocalPrototypes& protos);

struct Cls2ClsOptions {
  BlackboxConfig blackbox;
  double eps = 1e-8;
  // Stop the dispersion-term gradient at the prototypes (no instance gradient).
  bool detach_dispersion = false;
};

// d / (sum_k |Z_k| |mu_k - mu_bar|^2 + eps).
LossBundle cls2cls_dispersion_term(const FeatureBatch& batch, const LocalPrototypes& protos,
                                   const Cls2ClsOptions& opts);

// Rank match between the prior-label similarity and the prototype cosine
// similarity, restricted to classes present in the batch.
LossBundle cls2cls_ordinal_term(const FeatureBatch& batch, const LocalPrototypes& protos,
                                std::span<const int> prior_labels, const Cls2ClsOptions& opts);

// Class-to-class separation: dispersion + ordinal term. Requires at least two
// classes in the batch (DegenerateBatchError otherwise).
LossBundle cls2cls_loss(const FeatureBatch& batch, const LocalPrototypes& protos,
                        std::span<const int> prior_labels, const Cls2ClsOptions& opts);

struct HybridSwitches {
  bool ins2ins = true;
  bool ins2cls = true;
  bool cls2cls = true;

  bool any() const noexcept { return ins2ins || ins2cls || cls2cls; }

  friend bool operator==(const HybridSwitches&, const HybridSwitches&) = default;
};

struct HybridOptions {
  HybridSwitches switches;
  Cls2ClsOptions cls2cls;
  std::vector<int> prior_labels;  // empty means 1..K
};

struct HybridLoss {
  LossBundle total;
  double ins2ins = 0.0;
  double ins2cls = 0.0;
  double cls2cls = 0.0;
};

// Sum of the enabled components; disabled components contribute exactly zero.
HybridLoss hybrid_ordinal_loss(const FeatureBatch& batch, const HybridOptions& opts);

// Mean softmax cross-entropy. Labels are 1-based.
LogitBundle cross_entropy_loss(const DenseMatrix& logits, std::span<const int> labels);

// ce + lambda * hyb.
TotalLoss total_loss(const LogitBundle& ce, const LossBundle& hyb, double lambda_hyb);

}  // namespace ordproto
