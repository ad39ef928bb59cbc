#include "ordproto/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ordproto/errors.hpp"

namespace ordproto {

namespace {

void check_samples(std::span<const ScoredSample> samples, int& n_pos, int& n_neg) {
  if (samples.empty()) throw EmptyInputError("binary metrics: no samples");
  n_pos = 0;
  n_neg = 0;
  for (const ScoredSample& s : samples) {
    if (!(s.score >= 0.0 && s.score <= 1.0)) {
      throw OutOfRangeError("binary metrics: score outside [0, 1]");
    }
    (s.truth == Progression::Progressive ? n_pos : n_neg)++;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw OneClassOnlyError("binary metrics: need both stable and progressive samples");
  }
}

}  // namespace

double roc_auc(std::span<const ScoredSample> samples) {
  int n_pos = 0;
  int n_neg = 0;
  check_samples(samples, n_pos, n_neg);
  double wins = 0.0;
  for (const ScoredSample& p : samples) {
    if (p.truth != Progression::Progressive) continue;
    for (const ScoredSample& q : samples) {
      if (q.truth != Progression::Stable) continue;
      if (p.score > q.score) {
        wins += 1.0;
      } else if (p.score == q.score) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(n_pos) * n_neg);
}

BinaryMetrics binary_metrics(std::span<const ScoredSample> samples) {
  BinaryMetrics m;
  check_samples(samples, m.n_pos, m.n_neg);
  int tp = 0;
  int fp = 0;
  int tn = 0;
  int fn = 0;
  for (const ScoredSample& s : samples) {
    const bool predicted = classify(s.score) == Progression::Progressive;
    const bool actual = s.truth == Progression::Progressive;
    if (predicted && actual) ++tp;
    if (predicted && !actual) ++fp;
    if (!predicted && !actual) ++tn;
    if (!predicted && actual) ++fn;
  }
  m.acc = static_cast<double>(tp + tn) / static_cast<double>(samples.size());
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  m.recall = static_cast<double>(tp) / (tp + fn);
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.auc = roc_auc(samples);
  return m;
}

nlohmann::json metrics_to_json(const BinaryMetrics& m) {
  return {{"acc", m.acc},         {"auc", m.auc},       {"f1", m.f1},
          {"precision", m.precision}, {"recall", m.recall}, {"n_pos", m.n_pos},
          {"n_neg", m.n_neg}};
}

Vector mid_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  Vector r(x.size());
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    while (end + 1 < order.size() && x[order[end + 1]] == x[order[start]]) ++end;
    const double avg = 0.5 * static_cast<double>(start + end) + 1.0;
    for (std::size_t p = start; p <= end; ++p) r[order[p]] = avg;
    start = end + 1;
  }
  return r;
}

namespace {

Vector pooled(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw EmptyInputError("mann_whitney: both samples must be non-empty");
  Vector all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  return all;
}

}  // namespace

double mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  const Vector r = mid_ranks(pooled(a, b));
  const double na = static_cast<double>(a.size());
  double ra = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ra += r[i];
  return ra - na * (na + 1.0) / 2.0;
}

ExactUTails mann_whitney_exact_tails(std::span<const double> a, std::span<const double> b) {
  const Vector all = pooled(a, b);
  const std::size_t n = all.size();
  const std::size_t na = a.size();
  if (n > 20) throw TooLargeError("mann_whitney exact: more than 20 observations");
  const Vector r = mid_ranks(all);
  const double offset = static_cast<double>(na) * (static_cast<double>(na) + 1.0) / 2.0;
  double observed = 0.0;
  for (std::size_t i = 0; i < na; ++i) observed += r[i];
  observed -= offset;

  // Mid-ranks are multiples of 1/2, so U compares exactly in double.
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(na), true);
  long ge = 0;
  long le = 0;
  long eq = 0;
  long total = 0;
  // prev_permutation over a descending-sorted selection mask visits every
  // subset of size na exactly once.
  do {
    double u = -offset;
    for (std::size_t i = 0; i < n; ++i) {
      if (pick[i]) u += r[i];
    }
    ++total;
    if (u >= observed) ++ge;
    if (u <= observed) ++le;
    if (u == observed) ++eq;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  const double t = static_cast<double>(total);
  return {ge / t, le / t, eq / t};
}

double mann_whitney_exact(std::span<const double> a, std::span<const double> b) {
  return mann_whitney_exact_tails(a, b).greater_equal;
}

double mann_whitney_normal(std::span<const double> a, std::span<const double> b) {
  const Vector all = pooled(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  const double u = mann_whitney_u(a, b);

  Vector sorted = all;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double var = na * nb / 12.0 * ((n + 1.0) - (n > 1.0 ? tie_term / (n * (n - 1.0)) : 0.0));
  if (!(var > 0.0)) return 1.0;  // every observation tied: no evidence either way
  const double z = (u - na * nb / 2.0 - 0.5) / std::sqrt(var);
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

double mann_whitney_one_sided(std::span<const double> a, std::span<const double> b) {
  if (a.size() + b.size() <= 12) return mann_whitney_exact(a, b);
  return mann_whitney_normal(a, b);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DimMismatchError("spearman: need two equal-length inputs of size >= 2");
  }
  const Vector rx = mid_ranks(x);
  const Vector ry = mid_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInputError("spearman: constant input");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace ordproto
