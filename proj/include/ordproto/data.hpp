#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ordproto/linalg.hpp"
#include "ordproto/prototypes.hpp"

namespace ordproto {

// Synthetic cohort layout. latent_t is uniform inside each class band; the
// bands partition [0, 1] at `band_edges` (num_classes - 1 increasing interior
// cut points). Samples of `middle_classes` carry a fine label that is
// progressive iff latent_t >= progression_cut.
struct GenerationConfig {
  int num_classes = 3;
  std::vector<int> class_counts{200, 200, 200};
  int input_dim = 16;
  double noise = 0.15;
  // highest sinusoid frequency of the trajectory, in units of pi
  double max_frequency = 3.0;
  std::vector<double> band_edges{1.0 / 3.0, 2.0 / 3.0};
  double progression_cut = 0.5;
  std::vector<int> middle_classes{2};

  // Throws BadConfigError naming the offending key.
  void validate() const;

  // Defaults for a K-class layout: equal bands, 200 per class, every class
  // except the first and last is a middle class.
  static GenerationConfig for_classes(int num_classes);

  friend bool operator==(const GenerationConfig&, const GenerationConfig&) = default;
};

struct Sample {
  int id = 0;
  Vector x;
  int coarse_label = 1;
  double latent_t = 0.0;
  std::optional<Progression> fine_label;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct SyntheticOrdinalDataset {
  std::vector<Sample> samples;
  GenerationConfig config;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return samples.size(); }
  int input_dim() const;
  int num_classes() const;
  std::vector<int> coarse_labels() const;
  SyntheticOrdinalDataset subset(std::span<const std::size_t> indices) const;
};

// Trainer input. Deliberately has no access to fine labels or latent_t.
struct TrainingSet {
  DenseMatrix inputs;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
};

TrainingSet training_view(const SyntheticOrdinalDataset& ds);

// Point on the noise-free trajectory at progression t.
Vector trajectory(double t, int input_dim, double max_frequency);

SyntheticOrdinalDataset generate(const GenerationConfig& config, std::uint64_t seed);

// Mini-batch index sets for one epoch. Every batch holds at least one sample
// of each class and every sample appears at least once. Throws
// BatchTooSmallError when batch_size < num_classes.
std::vector<std::vector<std::size_t>> stratified_batches(std::span<const int> labels,
                                                         int num_classes, int batch_size,
                                                         std::uint64_t seed);

// Stratified fold ids in 1..k, one per sample. Throws BadKError for k < 2 or
// when some class has fewer than k samples.
std::vector<int> kfold_split(std::span<const int> labels, int num_classes, int k,
                             std::uint64_t seed);

// CSV: id,coarse_label,fine_label,latent_t,x0..x{d-1}; reals use 17
// significant digits. load throws IoError or ParseError with a line number.
void save_dataset(const SyntheticOrdinalDataset& ds, const std::filesystem::path& path);
SyntheticOrdinalDataset load_dataset(const std::filesystem::path& path);

}  // namespace ordproto
