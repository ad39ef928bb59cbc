#pragma once

#include <span>
#include <vector>

#include "ordproto/linalg.hpp"

namespace ordproto {

// A permutation of 1..n. Entry i is the descending-order position of a[i].
using RankVector = std::vector<int>;

struct BlackboxConfig {
  // Interpolation step of the blackbox backward pass. Must be > 0.
  double lambda_interp = 1.0;

  friend bool operator==(const BlackboxConfig&, const BlackboxConfig&) = default;
};

// Descending rank with ties resolved by lower index first:
//   rank[i] = 1 + #{j : a[j] > a[i]} + #{j < i : a[j] == a[i]}.
RankVector rank(std::span<const double> a);

// Exhaustive argmin of a^T pi over all permutations pi of 1..n (n <= 8).
// Among equal minimizers the lexicographically smallest pi wins.
RankVector rank_argmin_oracle(std::span<const double> a);

// Interpolated gradient of a rank-based loss with respect to the ranked scores.
// `upstream` is dL/dR(a). Re-solves the ranking at a + lambda * upstream and
// returns (R(a') - R(a)) / lambda. Zero upstream gives a zero gradient.
Vector blackbox_rank_backward(std::span<const double> a, std::span<const double> upstream,
                              const BlackboxConfig& cfg);

}  // namespace ordproto
