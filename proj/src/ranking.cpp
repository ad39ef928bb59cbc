#include "ordproto/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ordproto/errors.hpp"

namespace ordproto {

RankVector rank(std::span<const double> a) {
  if (a.empty()) throw EmptyInputError("rank: empty input");
  std::vector<std::size_t> order(a.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Stable descending sort keeps lower indices first within ties.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a[i] > a[j]; });
  RankVector r(a.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) r[order[pos]] = static_cast<int>(pos) + 1;
  return r;
}

RankVector rank_argmin_oracle(std::span<const double> a) {
  if (a.empty()) throw EmptyInputError("rank_argmin_oracle: empty input");
  if (a.size() > 8) {
    throw TooLargeError("rank_argmin_oracle: n = " + std::to_string(a.size()) + " exceeds 8");
  }
  RankVector pi(a.size());
  std::iota(pi.begin(), pi.end(), 1);
  RankVector best = pi;
  double best_value = std::numeric_limits<double>::infinity();
  // next_permutation walks in lexicographic order, so a strict < keeps the
  // lexicographically smallest minimizer.
  do {
    double value = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) value += a[i] * pi[i];
    if (value < best_value) {
      best_value = value;
      best = pi;
    }
  } while (std::next_permutation(pi.begin(), pi.end()));
  return best;
}

Vector blackbox_rank_backward(std::span<const double> a, std::span<const double> upstream,
                              const BlackboxConfig& cfg) {
  if (a.size() != upstream.size()) {
    throw DimMismatchError("blackbox_rank_backward: scores have length " +
                           std::to_string(a.size()) + ", upstream " +
                           std::to_string(upstream.size()));
  }
  if (!(cfg.lambda_interp > 0.0)) {
    throw OutOfRangeError("blackbox_rank_backward: lambda_interp must be > 0");
  }
  Vector grad(a.size(), 0.0);
  if (std::all_of(upstream.begin(), upstream.end(), [](double g) { return g == 0.0; })) {
    return grad;
  }
  Vector shifted(a.begin(), a.end());
  for (std::size_t i = 0; i < a.size(); ++i) shifted[i] += cfg.lambda_interp * upstream[i];
  const RankVector base = rank(a);
  const RankVector moved = rank(shifted);
  for (std::size_t i = 0; i < a.size(); ++i) {
    grad[i] = static_cast<double>(moved[i] - base[i]) / cfg.lambda_interp;
  }
  return grad;
}

}  // namespace ordproto
