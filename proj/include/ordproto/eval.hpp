#pragma once

#include <span>
#include <vector>

#include "json.hpp"
#include "ordproto/linalg.hpp"
#include "ordproto/prototypes.hpp"

namespace ordproto {

struct ScoredSample {
  double score = 0.0;  // predicted probability of progression, in [0, 1]
  Progression truth = Progression::Stable;
};

// Positive class = progressive; decision rule matches classify().
struct BinaryMetrics {
  double acc = 0.0;
  double auc = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  int n_pos = 0;
  int n_neg = 0;
};

// Throws EmptyInputError on no samples, OneClassOnlyError unless both truth
// classes are present, OutOfRangeError on a score outside [0, 1].
BinaryMetrics binary_metrics(std::span<const ScoredSample> samples);

// Fraction of (progressive, stable) pairs ordered correctly, ties count 1/2.
double roc_auc(std::span<const ScoredSample> samples);

// {acc, auc, f1, precision, recall, n_pos, n_neg}
nlohmann::json metrics_to_json(const BinaryMetrics& m);

// Average ranks (1-based) with ties sharing their mean rank.
Vector mid_ranks(std::span<const double> x);

// Mann-Whitney U of sample a against b, computed from mid-ranks.
double mann_whitney_u(std::span<const double> a, std::span<const double> b);

// Tail masses of the exact permutation distribution of U at the observed value.
struct ExactUTails {
  double greater_equal = 0.0;  // P(U >= u_obs)
  double less_equal = 0.0;     // P(U <= u_obs)
  double equal = 0.0;          // P(U == u_obs)
};

// Enumerates every assignment of the pooled values to a group of size |a|.
// Throws TooLargeError when |a| + |b| > 20.
ExactUTails mann_whitney_exact_tails(std::span<const double> a, std::span<const double> b);

// One-sided p-value for "a is stochastically greater than b".
double mann_whitney_exact(std::span<const double> a, std::span<const double> b);
// Normal approximation with tie and continuity correction.
double mann_whitney_normal(std::span<const double> a, std::span<const double> b);
// Exact when |a| + |b| <= 12, normal approximation otherwise.
double mann_whitney_one_sided(std::span<const double> a, std::span<const double> b);

// Pearson correlation of mid-rank vectors. Throws DimMismatchError for
// unequal lengths or fewer than two points, DegenerateInputError if either
// input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace ordproto
