#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ordproto/errors.hpp"
#include "ordproto/losses.hpp"
#include "test_util.hpp"

using namespace ordproto;

namespace {

FeatureBatch make_batch(const std::vector<Vector>& rows, std::vector<int> labels, int k) {
  return {DenseMatrix::from_rows(rows), std::move(labels), k};
}

FeatureBatch random_batch(std::mt19937_64& rng, std::size_t m, std::size_t d, int k) {
  FeatureBatch b{testutil::random_matrix(rng, m, d), std::vector<int>(m), k};
  // every class present, the rest random
  std::uniform_int_distribution<int> cls(1, k);
  for (std::size_t i = 0; i < m; ++i) {
    b.labels[i] = i < static_cast<std::size_t>(k) ? static_cast<int>(i) + 1 : cls(rng);
  }
  return b;
}

Vector unit_at_degrees(double deg) {
  const double r = deg * std::numbers::pi / 180.0;
  return {std::cos(r), std::sin(r)};
}

// Finite-difference gradient of a loss over every feature entry of the batch.
Vector batch_numeric_grad(FeatureBatch batch, const std::function<double(const FeatureBatch&)>& f) {
  const Vector flat(batch.features.data().begin(), batch.features.data().end());
  return testutil::numeric_grad(
      [&](std::span<const double> x) {
        std::copy(x.begin(), x.end(), batch.features.data().begin());
        return f(batch);
      },
      flat);
}

DenseMatrix rotate_rows(const DenseMatrix& m, double angle) {
  DenseMatrix out = m;
  const double c = std::cos(angle), s = std::sin(angle);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    // rotate in the plane of the first two coordinates
    out(i, 0) = c * m(i, 0) - s * m(i, 1);
    out(i, 1) = s * m(i, 0) + c * m(i, 1);
  }
  return out;
}

}  // namespace

TEST_CASE("label similarity") {
  const DenseMatrix s = label_similarity(std::vector<int>{1, 2, 3});
  CHECK(s == DenseMatrix::from_rows({{0, -1, -2}, {-1, 0, -1}, {-2, -1, 0}}));
  CHECK(label_similarity(std::vector<int>{2, 2}) == DenseMatrix(2, 2, 0.0));
  CHECK_THROWS_AS(label_similarity(std::vector<int>{}), EmptyInputError);
}

TEST_CASE("feature similarity") {
  const DenseMatrix eye = feature_similarity(DenseMatrix::from_rows({{1, 0}, {0, 1}}));
  CHECK(eye == DenseMatrix::from_rows({{1, 0}, {0, 1}}));

  std::mt19937_64 rng(17);
  const DenseMatrix z = testutil::random_matrix(rng, 6, 4);
  const DenseMatrix s = feature_similarity(z);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(std::abs(s(i, i) - 1.0) <= 1e-9);
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(std::abs(s(i, j) - cosine_similarity(z.row(i), z.row(j))) <= 1e-12);
      CHECK(std::abs(s(i, j) - s(j, i)) <= 1e-9);
    }
  }
  CHECK_THROWS_AS(feature_similarity(DenseMatrix::from_rows({{1, 0}, {0, 0}})), ZeroVectorError);
}

TEST_CASE("ins2ins examples") {
  // ranks already agree in every row
  const FeatureBatch agree = make_batch(
      {unit_at_degrees(0), unit_at_degrees(45), unit_at_degrees(90)}, {1, 2, 3}, 3);
  CHECK(ins2ins_loss(agree, {}).value == 0.0);

  // S^y rows rank to [1,2] and [2,1]; S^z rows are all ones and rank to [1,2]
  const FeatureBatch tie = make_batch({{1, 0}, {1, 0}}, {1, 3}, 3);
  CHECK(ins2ins_loss(tie, {}).value == doctest::Approx(1.0));
}

TEST_CASE("ins2ins invariances") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  for (int trial = 0; trial < 50; ++trial) {
    FeatureBatch b = random_batch(rng, 8, 5, 3);
    const double base = ins2ins_loss(b, {}).value;
    CHECK(base >= 0.0);

    FeatureBatch rotated = b;
    rotated.features = rotate_rows(b.features, angle(rng));
    CHECK(ins2ins_loss(rotated, {}).value == doctest::Approx(base));

    // increasing affine relabel y -> 3y - 1 keeps every S^y row order. A
    // non-affine map such as 1,2,3 -> 1,3,7 does not (it breaks row ties).
    FeatureBatch relabeled = b;
    relabeled.num_classes = 8;
    for (int& y : relabeled.labels) y = 3 * y - 1;
    CHECK(ins2ins_loss(relabeled, {}).value == base);
  }
}

TEST_CASE("ins2ins gradient flows through the cosine chain") {
  // With the rank-side gradient G fixed, the point gradient must equal the
  // derivative of sum_ij G_ij cos(z_i, z_j).
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const DenseMatrix z = testutil::random_matrix(rng, 6, 4);
    const DenseMatrix g = testutil::random_matrix(rng, 6, 6);
    const DenseMatrix analytic = similarity_grad_to_points(z, g);
    const Vector flat(z.data().begin(), z.data().end());
    const Vector numeric = testutil::numeric_grad(
        [&](std::span<const double> x) {
          DenseMatrix p(6, 4);
          std::copy(x.begin(), x.end(), p.data().begin());
          const DenseMatrix s = feature_similarity(p);
          double total = 0.0;
          for (std::size_t i = 0; i < 6; ++i) {
            for (std::size_t j = 0; j < 6; ++j) {
              if (i != j) total += g(i, j) * s(i, j);
            }
          }
          return total;
        },
        flat);
    CHECK(testutil::rel_error(analytic.data(), numeric) <= 1e-5);
  }
}

TEST_CASE("ins2ins gradient descent lowers the loss on free features") {
  std::mt19937_64 rng(31);
  FeatureBatch b = random_batch(rng, 8, 4, 3);
  const double start = ins2ins_loss(b, {}).value;
  double best = start;
  for (int it = 0; it < 300; ++it) {
    const LossBundle l = ins2ins_loss(b, {});
    best = std::min(best, l.value);
    for (std::size_t i = 0; i < b.features.data().size(); ++i) {
      b.features.data()[i] -= 0.001 * l.feature_grads.data()[i];
    }
  }
  CHECK(best < 0.5 * start);
}

TEST_CASE("local prototypes") {
  const FeatureBatch one = make_batch({{2, 3}}, {2}, 3);
  const LocalPrototypes p = local_prototypes(one);
  CHECK(p.of(2) == Vector{2, 3});
  CHECK_FALSE(p.present(1));
  CHECK(p.num_present() == 1);

  const FeatureBatch opposite = make_batch({{1, 0}, {-1, 0}}, {1, 1}, 2);
  CHECK(local_prototypes(opposite).of(1) == Vector{0, 0});

  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    const FeatureBatch b = random_batch(rng, 9, 3, 4);
    const LocalPrototypes q = local_prototypes(b);
    int total = 0;
    for (int c : q.counts) total += c;
    CHECK(total == 9);
    for (std::size_t j = 0; j < 3; ++j) {
      double weighted = 0.0;
      for (int k = 1; k <= 4; ++k) {
        if (q.present(k)) weighted += q.counts[k - 1] * q.of(k)[j];
      }
      CHECK(std::abs(weighted / 9.0 - q.overall[j]) <= 1e-12);
    }
  }
}

TEST_CASE("ins2cls values and gradient") {
  const FeatureBatch tight = make_batch({{1, 2}, {1, 2}, {3, 3}}, {1, 1, 2}, 2);
  CHECK(ins2cls_loss(tight, local_prototypes(tight)).value == 0.0);

  const FeatureBatch pair = make_batch({{1, 0}, {-1, 0}}, {1, 1}, 1);
  CHECK(ins2cls_loss(pair, local_prototypes(pair)).value == doctest::Approx(1.0));

  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const FeatureBatch b = random_batch(rng, 8, 5, 3);
    const LossBundle l = ins2cls_loss(b, local_prototypes(b));
    CHECK(l.value >= 0.0);
    const Vector numeric = batch_numeric_grad(
        b, [](const FeatureBatch& x) { return ins2cls_loss(x, local_prototypes(x)).value; });
    CHECK(testutil::rel_error(l.feature_grads.data(), numeric) <= 1e-5);
  }
}

TEST_CASE("cls2cls dispersion term") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    const FeatureBatch b = random_batch(rng, 8, 4, 3);
    const LossBundle l = cls2cls_dispersion_term(b, local_prototypes(b), {});
    CHECK(l.value > 0.0);
    const Vector numeric = batch_numeric_grad(b, [](const FeatureBatch& x) {
      return cls2cls_dispersion_term(x, local_prototypes(x), {}).value;
    });
    CHECK(testutil::rel_error(l.feature_grads.data(), numeric) <= 1e-5);
  }

  // doubling every displacement from the overall mean quarters the term
  std::mt19937_64 rng2(47);
  FeatureBatch b = random_batch(rng2, 6, 3, 3);
  const LocalPrototypes p = local_prototypes(b);
  FeatureBatch wide = b;
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      wide.features(i, j) = p.overall[j] + 2.0 * (b.features(i, j) - p.overall[j]);
    }
  }
  Cls2ClsOptions no_eps;
  no_eps.eps = 0.0;
  const double v1 = cls2cls_dispersion_term(b, p, no_eps).value;
  const double v2 = cls2cls_dispersion_term(wide, local_prototypes(wide), no_eps).value;
  CHECK(v2 == doctest::Approx(v1 / 4.0).epsilon(1e-12));

  // coincident prototypes: d / eps, finite
  const FeatureBatch same = make_batch({{1, 1}, {1, 1}, {1, 1}}, {1, 2, 3}, 3);
  const LossBundle big = cls2cls_dispersion_term(same, local_prototypes(same), {});
  CHECK(big.value == doctest::Approx(2.0 / 1e-8));
  CHECK(big.feature_grads.all_finite());

  // detached: value unchanged, no instance gradient
  Cls2ClsOptions detach;
  detach.detach_dispersion = true;
  const FeatureBatch rb = random_batch(rng2, 6, 3, 3);
  const LossBundle d = cls2cls_dispersion_term(rb, local_prototypes(rb), detach);
  CHECK(d.value == cls2cls_dispersion_term(rb, local_prototypes(rb), {}).value);
  CHECK(d.feature_grads == DenseMatrix(6, 3, 0.0));
}

TEST_CASE("cls2cls ordinal term") {
  const FeatureBatch b = make_batch(
      {unit_at_degrees(0), unit_at_degrees(45), unit_at_degrees(90)}, {1, 2, 3}, 3);
  const std::vector<int> prior{1, 2, 3};
  CHECK(cls2cls_ordinal_term(b, local_prototypes(b), prior, {}).value == 0.0);

  // swapped order is penalized
  const FeatureBatch swapped = make_batch(
      {unit_at_degrees(0), unit_at_degrees(90), unit_at_degrees(45)}, {1, 2, 3}, 3);
  CHECK(cls2cls_ordinal_term(swapped, local_prototypes(swapped), prior, {}).value > 0.0);

  const FeatureBatch lonely = make_batch({{1, 0}, {0, 1}}, {2, 2}, 3);
  CHECK_THROWS_AS(cls2cls_loss(lonely, local_prototypes(lonely), prior, {}),
                  DegenerateBatchError);

  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    const FeatureBatch r = random_batch(rng, 8, 4, 3);
    const LocalPrototypes p = local_prototypes(r);
    const LossBundle c = cls2cls_loss(r, p, prior, {});
    const LossBundle disp = cls2cls_dispersion_term(r, p, {});
    const LossBundle ord = cls2cls_ordinal_term(r, p, prior, {});
    CHECK(disp.value >= 0.0);
    CHECK(ord.value >= 0.0);
    CHECK(c.value == disp.value + ord.value);
  }
}

TEST_CASE("hybrid loss is the sum of its parts") {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 50; ++trial) {
    const FeatureBatch b = random_batch(rng, 8, 4, 3);
    const HybridLoss h = hybrid_ordinal_loss(b, {});
    const LocalPrototypes p = local_prototypes(b);
    const std::vector<int> prior{1, 2, 3};
    const LossBundle a = ins2ins_loss(b, {});
    const LossBundle c = ins2cls_loss(b, p);
    const LossBundle s = cls2cls_loss(b, p, prior, {});
    CHECK(std::abs(h.total.value - (a.value + c.value + s.value)) <= 1e-12);
    CHECK(h.ins2ins == a.value);
    CHECK(h.ins2cls == c.value);
    CHECK(h.cls2cls == s.value);
    for (std::size_t i = 0; i < h.total.feature_grads.data().size(); ++i) {
      const double sum =
          a.feature_grads.data()[i] + c.feature_grads.data()[i] + s.feature_grads.data()[i];
      CHECK(std::abs(h.total.feature_grads.data()[i] - sum) <= 1e-12);
    }
  }

  HybridOptions off;
  off.switches = {false, false, false};
  std::mt19937_64 rng2(61);
  const HybridLoss none = hybrid_ordinal_loss(random_batch(rng2, 8, 4, 3), off);
  CHECK(none.total.value == 0.0);
  CHECK(none.total.feature_grads == DenseMatrix(8, 4, 0.0));
}

TEST_CASE("cross entropy") {
  const std::vector<int> labels{1, 2};
  const LogitBundle zero = cross_entropy_loss(DenseMatrix(2, 3, 0.0), labels);
  CHECK(zero.value == doctest::Approx(std::log(3.0)).epsilon(1e-12));

  const LogitBundle sat = cross_entropy_loss(DenseMatrix::from_rows({{50, 0, 0}}), std::vector<int>{1});
  CHECK(sat.value <= 1e-20);

  CHECK_THROWS_AS(cross_entropy_loss(DenseMatrix(1, 3), std::vector<int>{4}), LabelOutOfRangeError);
  CHECK_THROWS_AS(cross_entropy_loss(DenseMatrix(1, 3), std::vector<int>{0}), LabelOutOfRangeError);

  std::mt19937_64 rng(67);
  std::uniform_int_distribution<int> cls(1, 4);
  for (int trial = 0; trial < 50; ++trial) {
    DenseMatrix logits = testutil::random_matrix(rng, 6, 4);
    std::vector<int> y(6);
    for (int& v : y) v = cls(rng);
    const LogitBundle l = cross_entropy_loss(logits, y);
    for (std::size_t i = 0; i < 6; ++i) {
      double row = 0.0;
      for (double g : l.logit_grads.row(i)) row += g;
      CHECK(std::abs(row) <= 1e-12);
    }
    const Vector flat(logits.data().begin(), logits.data().end());
    const Vector numeric = testutil::numeric_grad(
        [&](std::span<const double> x) {
          DenseMatrix m(6, 4);
          std::copy(x.begin(), x.end(), m.data().begin());
          return cross_entropy_loss(m, y).value;
        },
        flat);
    CHECK(testutil::rel_error(l.logit_grads.data(), numeric) <= 1e-5);

    // one small step downhill
    DenseMatrix stepped = logits;
    for (std::size_t i = 0; i < stepped.data().size(); ++i) {
      stepped.data()[i] -= 1e-3 * l.logit_grads.data()[i];
    }
    CHECK(cross_entropy_loss(stepped, y).value < l.value);
  }
}

TEST_CASE("total loss is affine in the weight") {
  std::mt19937_64 rng(71);
  const LogitBundle ce{1.5, testutil::random_matrix(rng, 4, 3)};
  const LossBundle hyb{2.0, testutil::random_matrix(rng, 4, 5)};
  const TotalLoss t0 = total_loss(ce, hyb, 0.0);
  CHECK(t0.value == 1.5);
  CHECK(t0.logit_grads == ce.logit_grads);
  CHECK(t0.feature_grads == DenseMatrix(4, 5, 0.0));
  const TotalLoss t1 = total_loss(ce, hyb, 1.0);
  CHECK(t1.value == 3.5);
  CHECK(t1.feature_grads == hyb.feature_grads);
  CHECK(total_loss(ce, hyb, 0.5).value == 2.5);
}
