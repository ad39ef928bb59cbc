#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "ordproto/data.hpp"
#include "ordproto/errors.hpp"
#include "ordproto/trainer.hpp"

using namespace ordproto;

namespace {

SyntheticOrdinalDataset small_data(std::uint64_t seed, int per_class = 20) {
  GenerationConfig g;
  g.class_counts = {per_class, per_class, per_class};
  return generate(g, seed);
}

TrainConfig quick_config(int epochs = 3) {
  TrainConfig c;
  c.epochs = epochs;
  c.hidden = {16};
  c.feature_dim = 8;
  c.seeds = {1};
  return c;
}

// Mean of the `window` values ending at index i.
double smoothed(const std::vector<double>& v, std::size_t i, std::size_t window = 20) {
  const std::size_t start = i + 1 >= window ? i + 1 - window : 0;
  double s = 0.0;
  for (std::size_t j = start; j <= i; ++j) s += v[j];
  return s / static_cast<double>(i + 1 - start);
}

}  // namespace

TEST_CASE("lambda schedule") {
  CHECK(lambda_schedule(100, 100) == 1.0);
  CHECK(lambda_schedule(0, 100) == 0.0);
  CHECK(lambda_schedule(50, 100) == 0.5);
  CHECK_THROWS_AS(lambda_schedule(101, 100), OutOfRangeError);
  CHECK_THROWS_AS(lambda_schedule(-1, 100), OutOfRangeError);
  CHECK_THROWS_AS(lambda_schedule(0, 0), OutOfRangeError);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), BadConfigError);
  c = {};
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), BadConfigError);
  c = {};
  c.anchor_classes = {1, 4};
  CHECK_THROWS_AS(c.validate(), BadConfigError);
}

TEST_CASE("history records one row per iteration with the scheduled lr and weight") {
  const SyntheticOrdinalDataset ds = small_data(3);
  const TrainConfig cfg = quick_config(4);
  const TrainedModel t = train(cfg, training_view(ds), 1);
  const auto& it = t.history.iterations;
  // 60 samples, M = 8: 8 batches per epoch
  REQUIRE(it.size() == 32);
  CHECK(t.history.epochs.size() == 4);
  for (std::size_t i = 0; i < it.size(); ++i) {
    CHECK(it[i].iteration == static_cast<long>(i) + 1);
    CHECK(it[i].lr == cfg.adam.lr_at(it[i].epoch));
    CHECK(it[i].lr == doctest::Approx(2e-4 * std::pow(0.95, it[i].epoch)).epsilon(1e-14));
    if (i > 0) CHECK(it[i].lambda >= it[i - 1].lambda);
  }
  CHECK(it.front().lambda == 0.0);
  CHECK(it.back().lambda == 1.0);
  CHECK(t.store.trained());

  const std::string csv = t.history.to_csv();
  CHECK(csv.rfind("iteration,epoch,lr,lambda,loss_total,loss_ce,loss_i2i,loss_i2c,loss_c2c\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 33);

  TrainConfig per_epoch = cfg;
  per_epoch.lambda_mode = LambdaMode::Epoch;
  const TrainedModel e = train(per_epoch, training_view(ds), 1);
  for (const auto& r : e.history.iterations) CHECK(r.lambda == doctest::Approx(r.epoch / 3.0));
}

TEST_CASE("training is deterministic") {
  const SyntheticOrdinalDataset ds = small_data(4);
  const TrainConfig cfg = quick_config();
  const TrainedModel a = train(cfg, training_view(ds), 7);
  const TrainedModel b = train(cfg, training_view(ds), 7);
  CHECK(a.model == b.model);
  CHECK(a.store == b.store);
  CHECK(a.history.to_csv() == b.history.to_csv());
  const TrainedModel c = train(cfg, training_view(ds), 8);
  CHECK_FALSE(a.model == c.model);
}

TEST_CASE("switches off is plain cross-entropy training") {
  const SyntheticOrdinalDataset ds = small_data(5);
  TrainConfig off = quick_config();
  off.switches = {false, false, false};
  // settings that only matter to the ordinal terms
  TrainConfig off2 = off;
  off2.blackbox.lambda_interp = 3.0;
  off2.detach_dispersion = true;
  off2.lambda_start = 0.7;
  const TrainedModel a = train(off, training_view(ds), 2);
  const TrainedModel b = train(off2, training_view(ds), 2);
  CHECK(a.model == b.model);
  CHECK(a.store == b.store);
  for (const auto& r : a.history.iterations) {
    CHECK(r.loss_i2i == 0.0);
    CHECK(r.loss_i2c == 0.0);
    CHECK(r.loss_c2c == 0.0);
    CHECK(r.loss_total == r.loss_ce);
  }

  TrainConfig on = quick_config();
  const TrainedModel c = train(on, training_view(ds), 2);
  CHECK_FALSE(a.model == c.model);
}

TEST_CASE("without EMA the anchors are the class means of the final network") {
  const SyntheticOrdinalDataset ds = small_data(6);
  TrainConfig cfg = quick_config();
  cfg.use_ema = false;
  const TrainedModel t = train(cfg, training_view(ds), 3);
  CHECK(t.store.trained());
  const ForwardPass pass = forward(t.model, training_view(ds).inputs);
  Vector mean_low(8, 0.0);
  int n = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.samples[i].coarse_label != 1) continue;
    ++n;
    for (std::size_t j = 0; j < 8; ++j) mean_low[j] += pass.features(i, j);
  }
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(cosine_similarity(mean_low, t.store.anchor_low) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("numeric failure reports the iteration") {
  const SyntheticOrdinalDataset ds = small_data(7);
  TrainConfig cfg = quick_config();
  cfg.adam.base_lr = 1e300;
  try {
    train(cfg, training_view(ds), 1);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(e.iteration() >= 1);
  }
}

TEST_CASE("training needs every class") {
  GenerationConfig g;
  g.class_counts = {10, 10, 10};
  SyntheticOrdinalDataset ds = generate(g, 1);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.samples[i].coarse_label != 3) keep.push_back(i);
  }
  const SyntheticOrdinalDataset two = ds.subset(keep);
  TrainingSet view = training_view(two);
  view.num_classes = 3;
  CHECK_THROWS_AS(train(quick_config(), view, 1), DegenerateBatchError);
}

TEST_CASE("cross-entropy falls by epoch 10 on the default benchmark") {
  const SyntheticOrdinalDataset ds = generate(GenerationConfig{}, 11);
  TrainConfig cfg;
  cfg.epochs = 10;
  for (std::uint64_t seed : cfg.seeds) {
    const TrainedModel t = train(cfg, training_view(ds), seed);
    std::vector<double> ce;
    std::size_t end_first = 0;
    for (std::size_t i = 0; i < t.history.iterations.size(); ++i) {
      ce.push_back(t.history.iterations[i].loss_ce);
      if (t.history.iterations[i].epoch == 0) end_first = i;
    }
    CHECK(smoothed(ce, ce.size() - 1) < smoothed(ce, end_first));
  }
}

TEST_CASE("evaluation and multi-seed summary") {
  const SyntheticOrdinalDataset ds = small_data(9, 30);
  TrainConfig cfg = quick_config();
  const RunSummary one = run_seeds(cfg, training_view(ds), ds);
  REQUIRE(one.rows.size() == 1);
  CHECK(one.mean.acc == one.rows[0].eval.metrics.acc);
  CHECK(one.std.acc == 0.0);
  CHECK(one.std.spearman == 0.0);

  cfg.seeds = {4, 4};
  const RunSummary twin = run_seeds(cfg, training_view(ds), ds);
  CHECK(twin.rows[0].eval.metrics.acc == twin.rows[1].eval.metrics.acc);
  CHECK(twin.rows[0].eval.spearman == twin.rows[1].eval.spearman);

  cfg.seeds = {1, 2, 3, 4, 5};
  std::size_t calls = 0;
  const RunSummary five =
      run_seeds(cfg, training_view(ds), ds, [&](std::size_t, const TrainedModel&) { ++calls; });
  CHECK(calls == 5);
  const nlohmann::json j = summary_to_json(five);
  CHECK(j["per_seed"].size() == 5);
  CHECK(j.contains("mean"));
  CHECK(j.contains("std"));
  CHECK(j["per_seed"][2]["seed"] == 3);

  // sample standard deviation
  double m = 0.0;
  for (const auto& r : five.rows) m += r.eval.metrics.acc;
  m /= 5;
  double ss = 0.0;
  for (const auto& r : five.rows) ss += (r.eval.metrics.acc - m) * (r.eval.metrics.acc - m);
  CHECK(five.std.acc == doctest::Approx(std::sqrt(ss / 4)).epsilon(1e-12));

  // metrics only cover the middle class
  const TrainedModel t = train(cfg, training_view(ds), 1);
  const EvalResult r = evaluate(t.model, t.store, ds);
  CHECK(r.metrics.n_pos + r.metrics.n_neg == 30);
  const std::vector<double> scores = progression_scores(t.model, t.store, ds);
  CHECK(scores.size() == ds.size());
  for (double s : scores) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
}
