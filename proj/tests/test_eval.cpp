#include <cmath>
#include <random>

#include "doctest.h"
#include "ordproto/errors.hpp"
#include "ordproto/eval.hpp"

using namespace ordproto;

namespace {

std::vector<ScoredSample> scored(const std::vector<double>& s, const std::vector<int>& prog) {
  std::vector<ScoredSample> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.push_back({s[i], prog[i] ? Progression::Progressive : Progression::Stable});
  }
  return out;
}

// Pairwise AUC straight from the definition.
double brute_auc(const std::vector<ScoredSample>& v) {
  double num = 0.0, den = 0.0;
  for (const auto& p : v) {
    if (p.truth != Progression::Progressive) continue;
    for (const auto& n : v) {
      if (n.truth != Progression::Stable) continue;
      den += 1.0;
      num += p.score > n.score ? 1.0 : (p.score == n.score ? 0.5 : 0.0);
    }
  }
  return num / den;
}

}  // namespace

TEST_CASE("binary metrics examples") {
  const auto perfect = scored({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1});
  const BinaryMetrics m = binary_metrics(perfect);
  CHECK(m.acc == 1.0);
  CHECK(m.auc == 1.0);
  CHECK(m.f1 == 1.0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.n_pos == 2);
  CHECK(m.n_neg == 2);

  CHECK(roc_auc(scored({0.3, 0.3, 0.3, 0.3}, {0, 1, 0, 1})) == 0.5);
  CHECK(roc_auc(scored({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1})) == 0.75);

  // 0.5 is stable
  const BinaryMetrics half = binary_metrics(scored({0.5, 0.5}, {0, 1}));
  CHECK(half.acc == 0.5);
  CHECK(half.recall == 0.0);
  CHECK(half.precision == 0.0);
  CHECK(half.f1 == 0.0);

  CHECK_THROWS_AS(binary_metrics(std::vector<ScoredSample>{}), EmptyInputError);
  CHECK_THROWS_AS(binary_metrics(scored({0.2, 0.7}, {1, 1})), OneClassOnlyError);
  CHECK_THROWS_AS(binary_metrics(scored({0.2, 1.7}, {0, 1})), OutOfRangeError);
}

TEST_CASE("binary metrics properties") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ScoredSample> v;
    const int n = 4 + trial % 20;
    for (int i = 0; i < n; ++i) {
      // coarse grid so ties happen
      const double s = std::round(u(rng) * 10) / 10;
      v.push_back({s, coin(rng) ? Progression::Progressive : Progression::Stable});
    }
    v[0].truth = Progression::Progressive;
    v[1].truth = Progression::Stable;
    const BinaryMetrics m = binary_metrics(v);
    CHECK(m.auc == doctest::Approx(brute_auc(v)).epsilon(1e-12));
    CHECK(m.precision >= 0.0);
    CHECK(m.precision <= 1.0);
    CHECK(m.recall >= 0.0);
    CHECK(m.recall <= 1.0);
    if (m.precision + m.recall > 0) {
      CHECK(m.f1 == doctest::Approx(2 * m.precision * m.recall / (m.precision + m.recall)));
    }
    std::vector<ScoredSample> w = v;
    for (auto& s : w) s.score = std::pow(s.score, 3.0) * 0.5 + 0.1;
    CHECK(roc_auc(w) == m.auc);
  }
}

TEST_CASE("metrics json keys") {
  const nlohmann::json j = metrics_to_json(binary_metrics(scored({0.1, 0.9}, {0, 1})));
  for (const char* k : {"acc", "auc", "f1", "precision", "recall", "n_pos", "n_neg"}) {
    CHECK(j.contains(k));
  }
  CHECK(j.size() == 7);
}

TEST_CASE("mid ranks and U") {
  CHECK(mid_ranks(Vector{10, 20, 20, 30}) == Vector{1, 2.5, 2.5, 4});
  CHECK(mann_whitney_u(Vector{3, 4}, Vector{1, 2}) == 4.0);
  CHECK(mann_whitney_u(Vector{1, 2}, Vector{3, 4}) == 0.0);
  CHECK(mann_whitney_u(Vector{2}, Vector{2}) == 0.5);
}

TEST_CASE("mann whitney exact") {
  CHECK(mann_whitney_exact(Vector{3, 4}, Vector{1, 2}) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(mann_whitney_one_sided(Vector{3, 4}, Vector{1, 2}) ==
        doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(mann_whitney_one_sided(Vector{1, 2, 3}, Vector{3, 2, 1}) >= 0.5);
  CHECK_THROWS_AS(mann_whitney_one_sided(Vector{}, Vector{1}), EmptyInputError);
  CHECK_THROWS_AS(mann_whitney_exact_tails(Vector(11, 1.0), Vector(10, 2.0)), TooLargeError);

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> val(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t na = 1 + trial % 6, nb = 1 + (trial / 6) % 6;
    Vector a(na), b(nb);
    for (double& x : a) x = val(rng);
    for (double& x : b) x = val(rng);
    const ExactUTails t = mann_whitney_exact_tails(a, b);
    CHECK(std::abs(t.greater_equal + t.less_equal - t.equal - 1.0) <= 1e-12);
    CHECK(t.greater_equal > 0.0);
    CHECK(t.greater_equal <= 1.0);
  }
}

TEST_CASE("mann whitney normal approximation against scipy") {
  // scipy.stats.mannwhitneyu(alternative='greater', method='asymptotic')
  const Vector a{1.2, 3.4, 2.2, 5.1, 4.4, 3.3, 6.0, 2.8, 4.9, 5.5, 3.9, 4.1, 2.9};
  const Vector b{0.5, 1.9, 2.2, 3.0, 1.1, 2.7, 3.6, 0.9, 2.0, 1.4, 3.3};
  CHECK(mann_whitney_u(a, b) == 122.0);
  CHECK(mann_whitney_normal(a, b) == doctest::Approx(0.0018772284836905627).epsilon(1e-10));
  CHECK(mann_whitney_one_sided(a, b) == doctest::Approx(0.0018772284836905627).epsilon(1e-10));

  const Vector c{1, 2, 2, 3, 3, 3, 4};
  const Vector d{2, 3, 3, 4, 5, 5, 6, 6};
  CHECK(mann_whitney_normal(c, d) == doctest::Approx(0.9836278565325975).epsilon(1e-10));
}

TEST_CASE("spearman") {
  CHECK(spearman(Vector{1, 2, 3, 4}, Vector{2, 5, 9, 30}) == doctest::Approx(1.0));
  CHECK(spearman(Vector{1, 2, 3, 4}, Vector{4, 3, 2, -1}) == doctest::Approx(-1.0));
  CHECK(spearman(Vector{1, 2, 3}, Vector{1, 3, 2}) == doctest::Approx(0.5));
  // scipy.stats.spearmanr
  CHECK(spearman(Vector{1, 2, 2, 3, 5}, Vector{2, 1, 4, 4, 9}) ==
        doctest::Approx(0.7631578947368421).epsilon(1e-12));
  CHECK_THROWS_AS(spearman(Vector{1, 2}, Vector{1, 2, 3}), DimMismatchError);
  CHECK_THROWS_AS(spearman(Vector{1, 1, 1}, Vector{1, 2, 3}), DegenerateInputError);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    Vector x(10);
    for (double& v : x) v = n(rng);
    CHECK(spearman(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  }
}
