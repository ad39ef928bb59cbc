#include "ordproto/trainer.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ordproto/errors.hpp"

namespace ordproto {

void TrainConfig::validate() const {
  if (num_classes < 3) throw BadConfigError("classes", "need at least 3 classes");
  if (epochs < 1) throw BadConfigError("epochs", "must be >= 1");
  if (batch_size < num_classes) {
    throw BadConfigError("batch_size", "must be at least the number of classes");
  }
  if (feature_dim < 1) throw BadConfigError("feature_dim", "must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw BadConfigError("hidden", "widths must be >= 1");
  }
  if (!(adam.base_lr > 0.0)) throw BadConfigError("lr", "must be > 0");
  if (!(adam.lr_decay > 0.0 && adam.lr_decay <= 1.0)) {
    throw BadConfigError("lr_decay", "must lie in (0, 1]");
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw BadConfigError("beta1", "must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw BadConfigError("beta2", "must lie in [0, 1)");
  if (!(adam.eps > 0.0)) throw BadConfigError("adam_eps", "must be > 0");
  if (!(sigma > 0.0 && sigma < 1.0)) throw BadConfigError("sigma", "must lie strictly inside (0, 1)");
  if (!(lambda_start >= 0.0 && lambda_start <= 1.0)) {
    throw BadConfigError("lambda_start", "must lie in [0, 1]");
  }
  if (!(blackbox.lambda_interp > 0.0)) throw BadConfigError("blackbox_lambda", "must be > 0");
  if (!(dispersion_eps > 0.0)) throw BadConfigError("dispersion_eps", "must be > 0");
  auto check_anchor = [&](int a, const char* key) {
    if (a < 1 || a > num_classes) throw BadConfigError(key, "must lie in 1..classes");
  };
  check_anchor(anchor_classes.first, "anchor_low");
  check_anchor(anchor_classes.second, "anchor_high");
  if (anchor_classes.first == anchor_classes.second) {
    throw BadConfigError("anchor_high", "must differ from anchor_low");
  }
  if (seeds.empty()) throw BadConfigError("seeds", "must not be empty");
}

HybridOptions TrainConfig::hybrid_options() const {
  HybridOptions o;
  o.switches = switches;
  o.cls2cls.blackbox = blackbox;
  o.cls2cls.eps = dispersion_eps;
  o.cls2cls.detach_dispersion = detach_dispersion;
  return o;
}

ModelDims TrainConfig::model_dims(int input_dim) const {
  return ModelDims{input_dim, hidden, feature_dim, num_classes};
}

double lambda_schedule(long iter, long total_iters) {
  if (total_iters < 1 || iter < 0 || iter > total_iters) {
    throw OutOfRangeError("lambda_schedule: need 0 <= iter <= total_iters, total_iters >= 1");
  }
  return static_cast<double>(iter) / static_cast<double>(total_iters);
}

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double scheduled_lambda(const TrainConfig& cfg, long step, long total_steps, int epoch) {
  double ramp = 1.0;
  if (cfg.lambda_mode == LambdaMode::Iteration) {
    if (total_steps > 1) ramp = lambda_schedule(step, total_steps - 1);
  } else if (cfg.epochs > 1) {
    ramp = lambda_schedule(epoch, cfg.epochs - 1);
  }
  return cfg.lambda_start + (1.0 - cfg.lambda_start) * ramp;
}

FeatureBatch gather_batch(const DenseMatrix& features, const std::vector<int>& labels,
                          int num_classes) {
  return FeatureBatch{features, labels, num_classes};
}

}  // namespace

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out << "iteration,epoch,lr,lambda,loss_total,loss_ce,loss_i2i,loss_i2c,loss_c2c\n";
  for (const IterationRecord& r : iterations) {
    out << r.iteration << ',' << r.epoch << ',' << fmt(r.lr) << ',' << fmt(r.lambda) << ','
        << fmt(r.loss_total) << ',' << fmt(r.loss_ce) << ',' << fmt(r.loss_i2i) << ','
        << fmt(r.loss_i2c) << ',' << fmt(r.loss_c2c) << '\n';
  }
  return out.str();
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_csv();
  if (!out) throw IoError("write failed: " + path.string());
}

TrainedModel train(const TrainConfig& config, const TrainingSet& data, std::uint64_t seed) {
  config.validate();
  if (data.num_classes != config.num_classes) {
    throw DimMismatchError("train: data has " + std::to_string(data.num_classes) +
                           " classes, config expects " + std::to_string(config.num_classes));
  }
  const int input_dim = static_cast<int>(data.inputs.cols());
  TrainedModel out{Model(config.model_dims(input_dim), seed),
                   GlobalPrototypeStore::make(config.feature_dim, config.sigma,
                                              config.anchor_classes),
                   {}};
  AdamState adam(out.model.params().size(), config.adam);
  const HybridOptions hybrid = config.hybrid_options();

  // Batch layout depends only on labels, so every epoch has the same count.
  const std::size_t batches_per_epoch =
      stratified_batches(data.labels, config.num_classes, config.batch_size, seed).size();
  const long total_steps = static_cast<long>(batches_per_epoch) * config.epochs;

  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = stratified_batches(data.labels, config.num_classes, config.batch_size,
                                            splitmix64(seed ^ splitmix64(epoch + 1)));
    EpochSnapshot snap{epoch, 0.0, 0.0, 0.0};
    std::size_t seen = 0;
    std::size_t correct = 0;
    for (const auto& idx : batches) {
      const long iteration = step + 1;
      DenseMatrix x(idx.size(), data.inputs.cols());
      std::vector<int> y;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto src = data.inputs.row(idx[r]);
        std::copy(src.begin(), src.end(), x.row(r).begin());
        y.push_back(data.labels[idx[r]]);
      }

      const ForwardPass pass = forward(out.model, x);
      if (!pass.features.all_finite() || !pass.logits.all_finite()) {
        throw NumericError(iteration, "non-finite forward pass");
      }
      const FeatureBatch batch = gather_batch(pass.features, y, config.num_classes);
      const LogitBundle ce = cross_entropy_loss(pass.logits, y);
      const double lambda = scheduled_lambda(config, step, total_steps, epoch);

      IterationRecord rec;
      rec.iteration = iteration;
      rec.epoch = epoch;
      rec.lr = config.adam.lr_at(epoch);
      rec.lambda = lambda;
      rec.loss_ce = ce.value;

      DenseMatrix feature_grads(pass.features.rows(), pass.features.cols());
      rec.loss_total = ce.value;
      try {
        if (config.switches.any()) {
          const HybridLoss hyb = hybrid_ordinal_loss(batch, hybrid);
          const TotalLoss total = total_loss(ce, hyb.total, lambda);
          rec.loss_total = total.value;
          rec.loss_i2i = hyb.ins2ins;
          rec.loss_i2c = hyb.ins2cls;
          rec.loss_c2c = hyb.cls2cls;
          feature_grads = total.feature_grads;
        }
      } catch (const ZeroVectorError& e) {
        throw NumericError(iteration, e.what());
      }
      if (!std::isfinite(rec.loss_total) || !feature_grads.all_finite()) {
        throw NumericError(iteration, "non-finite loss or feature gradient");
      }

      const Vector grads = backward(out.model, pass, feature_grads, ce.logit_grads);
      if (!all_finite(grads)) throw NumericError(iteration, "non-finite parameter gradient");
      adam_step(adam, out.model.params(), grads, epoch);

      if (config.use_ema) {
        const LocalPrototypes protos = local_prototypes(batch);
        const auto [low, high] = config.anchor_classes;
        if (!protos.present(low) || !protos.present(high)) {
          throw DegenerateBatchError("iteration " + std::to_string(iteration) +
                                     ": anchor class missing from batch");
        }
        try {
          out.store = ema_update(std::move(out.store), protos.of(low), protos.of(high));
        } catch (const ZeroVectorError& e) {
          throw NumericError(iteration, e.what());
        }
      }

      for (std::size_t r = 0; r < y.size(); ++r) {
        const auto row = pass.logits.row(r);
        const auto arg = std::max_element(row.begin(), row.end()) - row.begin();
        if (static_cast<int>(arg) + 1 == y[r]) ++correct;
      }
      seen += y.size();
      snap.mean_total += rec.loss_total;
      snap.mean_ce += rec.loss_ce;
      out.history.iterations.push_back(rec);
      ++step;
    }
    snap.mean_total /= static_cast<double>(batches.size());
    snap.mean_ce /= static_cast<double>(batches.size());
    snap.head_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    out.history.epochs.push_back(snap);
  }

  if (!config.use_ema) {
    // Anchors from the final network: class means over the whole training set.
    const ForwardPass pass = forward(out.model, data.inputs);
    const LocalPrototypes protos =
        local_prototypes(FeatureBatch{pass.features, data.labels, config.num_classes});
    out.store.anchor_low = protos.of(config.anchor_classes.first);
    out.store.anchor_high = protos.of(config.anchor_classes.second);
  }
  return out;
}

std::vector<double> progression_scores(const Model& model, const GlobalPrototypeStore& store,
                                       const SyntheticOrdinalDataset& data) {
  const TrainingSet view = training_view(data);
  const ForwardPass pass = forward(model, view.inputs);
  std::vector<double> scores;
  scores.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    scores.push_back(predict_progression(pass.features.row(i), store));
  }
  return scores;
}

EvalResult evaluate(const Model& model, const GlobalPrototypeStore& store,
                    const SyntheticOrdinalDataset& data) {
  if (store.dim != model.dims().feature_dim) {
    throw DimMismatchError("evaluate: store dim does not match model feature dim");
  }
  const TrainingSet view = training_view(data);
  const ForwardPass pass = forward(model, view.inputs);
  std::vector<ScoredSample> scored;
  Vector closeness;
  Vector latent;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto z = pass.features.row(i);
    const Sample& s = data.samples[i];
    if (s.fine_label) scored.push_back({predict_progression(z, store), *s.fine_label});
    closeness.push_back(cosine_similarity(z, store.anchor_high));
    latent.push_back(s.latent_t);
  }
  return {binary_metrics(scored), spearman(closeness, latent)};
}

RunSummary summarize(std::vector<SeedResult> rows) {
  RunSummary s;
  s.rows = std::move(rows);
  if (s.rows.empty()) return s;
  const double n = static_cast<double>(s.rows.size());
  auto fields = [](const SeedResult& r) {
    const BinaryMetrics& m = r.eval.metrics;
    return std::array<double, 6>{m.acc, m.auc, m.f1, m.precision, m.recall, r.eval.spearman};
  };
  std::array<double, 6> mean{};
  for (const SeedResult& r : s.rows) {
    const auto f = fields(r);
    for (std::size_t i = 0; i < f.size(); ++i) mean[i] += f[i] / n;
  }
  std::array<double, 6> var{};
  if (s.rows.size() > 1) {
    for (const SeedResult& r : s.rows) {
      const auto f = fields(r);
      for (std::size_t i = 0; i < f.size(); ++i) var[i] += (f[i] - mean[i]) * (f[i] - mean[i]) / (n - 1.0);
    }
  }
  auto pack = [](const std::array<double, 6>& a) {
    return MetricStats{a[0], a[1], a[2], a[3], a[4], a[5]};
  };
  for (double& v : var) v = std::sqrt(v);
  s.mean = pack(mean);
  s.std = pack(var);
  return s;
}

RunSummary run_seeds(const TrainConfig& config, const TrainingSet& train_data,
                     const SyntheticOrdinalDataset& eval_data, const SeedCallback& on_trained) {
  config.validate();
  std::vector<SeedResult> rows;
  for (std::size_t i = 0; i < config.seeds.size(); ++i) {
    const std::uint64_t seed = config.seeds[i];
    const TrainedModel trained = train(config, train_data, seed);
    rows.push_back({seed, evaluate(trained.model, trained.store, eval_data)});
    if (on_trained) on_trained(i, trained);
  }
  return summarize(std::move(rows));
}

namespace {

nlohmann::json stats_to_json(const MetricStats& s) {
  return {{"acc", s.acc},         {"auc", s.auc},       {"f1", s.f1},
          {"precision", s.precision}, {"recall", s.recall}, {"spearman", s.spearman}};
}

}  // namespace

nlohmann::json summary_to_json(const RunSummary& summary) {
  nlohmann::json rows = nlohmann::json::array();
  for (const SeedResult& r : summary.rows) {
    nlohmann::json row = metrics_to_json(r.eval.metrics);
    row["seed"] = r.seed;
    row["spearman"] = r.eval.spearman;
    rows.push_back(std::move(row));
  }
  return {{"per_seed", std::move(rows)},
          {"mean", stats_to_json(summary.mean)},
          {"std", stats_to_json(summary.std)}};
}

}  // namespace ordproto
