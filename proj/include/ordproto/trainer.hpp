#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ordproto/data.hpp"
#include "ordproto/encoder.hpp"
#include "ordproto/eval.hpp"
#include "ordproto/losses.hpp"
#include "ordproto/prototypes.hpp"

namespace ordproto {

enum class LambdaMode { Iteration, Epoch };

struct TrainConfig {
  int num_classes = 3;
  int epochs = 60;
  int batch_size = 8;
  std::vector<int> hidden{64, 64};
  int feature_dim = 32;
  AdamConfig adam;
  double sigma = 0.9;
  // When false the anchors are the training-set class means of the final
  // network instead of the EMA store.
  bool use_ema = true;
  double lambda_start = 0.0;
  LambdaMode lambda_mode = LambdaMode::Iteration;
  BlackboxConfig blackbox;
  HybridSwitches switches;
  bool detach_dispersion = false;
  double dispersion_eps = 1e-8;
  std::pair<int, int> anchor_classes{1, 3};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  // Throws BadConfigError naming the offending key.
  void validate() const;

  HybridOptions hybrid_options() const;
  ModelDims model_dims(int input_dim) const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Linear ramp iter / total_iters. Throws OutOfRangeError unless
// 0 <= iter <= total_iters and total_iters >= 1.
double lambda_schedule(long iter, long total_iters);

struct IterationRecord {
  long iteration = 0;  // 1-based
  int epoch = 0;       // 0-based
  double lr = 0.0;
  double lambda = 0.0;
  double loss_total = 0.0;
  double loss_ce = 0.0;
  double loss_i2i = 0.0;
  double loss_i2c = 0.0;
  double loss_c2c = 0.0;
};

struct EpochSnapshot {
  int epoch = 0;
  double mean_total = 0.0;
  double mean_ce = 0.0;
  double head_accuracy = 0.0;  // coarse-label accuracy of the head over the epoch's batches
};

struct TrainHistory {
  std::vector<IterationRecord> iterations;
  std::vector<EpochSnapshot> epochs;

  // iteration,epoch,lr,lambda,loss_total,loss_ce,loss_i2i,loss_i2c,loss_c2c
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct TrainedModel {
  Model model;
  GlobalPrototypeStore store;
  TrainHistory history;
};

// Stratified batches, loss assembly with the scheduled weight, Adam step, then
// the EMA prototype update, for every batch of every epoch. Deterministic in
// (config, data, seed). Throws DegenerateBatchError or NumericError.
TrainedModel train(const TrainConfig& config, const TrainingSet& data, std::uint64_t seed);

struct EvalResult {
  BinaryMetrics metrics;       // on samples that carry a fine label
  double spearman = 0.0;       // cos(z, anchor_high) vs latent_t over all samples
};

EvalResult evaluate(const Model& model, const GlobalPrototypeStore& store,
                    const SyntheticOrdinalDataset& data);

// Progression probability for every sample.
std::vector<double> progression_scores(const Model& model, const GlobalPrototypeStore& store,
                                       const SyntheticOrdinalDataset& data);

struct SeedResult {
  std::uint64_t seed = 0;
  EvalResult eval;
};

struct MetricStats {
  double acc = 0.0;
  double auc = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double spearman = 0.0;
};

struct RunSummary {
  std::vector<SeedResult> rows;
  MetricStats mean;
  MetricStats std;  // sample standard deviation; 0 for a single seed
};

RunSummary summarize(std::vector<SeedResult> rows);

using SeedCallback = std::function<void(std::size_t index, const TrainedModel&)>;

// Trains once per configured seed (in order) and evaluates each run on
// `eval_data`. `on_trained` sees every trained model before it is dropped.
RunSummary run_seeds(const TrainConfig& config, const TrainingSet& train_data,
                     const SyntheticOrdinalDataset& eval_data,
                     const SeedCallback& on_trained = {});

nlohmann::json summary_to_json(const RunSummary& summary);

}  // namespace ordproto
