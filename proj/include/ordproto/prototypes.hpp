#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>

#include "json.hpp"
#include "ordproto/linalg.hpp"

namespace ordproto {

enum class Progression { Stable, Progressive };

std::string to_string(Progression p);

// EMA-maintained global prototypes of the two anchor classes. Anchors start
// as zero vectors and become nonzero after the first update.
struct GlobalPrototypeStore {
  int dim = 0;
  double sigma = 0.9;
  std::pair<int, int> anchor_classes{1, 3};
  Vector anchor_low;   // prototype of anchor_classes.first
  Vector anchor_high;  // prototype of anchor_classes.second

  // Zero-initialized store. Throws OutOfRangeError for sigma outside (0, 1)
  // or non-distinct anchors, BadDimsError for dim < 1.
  static GlobalPrototypeStore make(int dim, double sigma, std::pair<int, int> anchor_classes);

  bool trained() const;

  friend bool operator==(const GlobalPrototypeStore&, const GlobalPrototypeStore&) = default;
};

// One EMA step on both anchors:
//   p <- sigma * p / |p| + (1 - sigma) * mu / |mu|,
// except that a zero anchor is replaced by mu / |mu|.
GlobalPrototypeStore ema_update(GlobalPrototypeStore store, std::span<const double> mu_low,
                                std::span<const double> mu_high);

// Two-way softmax over cosine similarity to the anchors; returns the
// probability of the high (progressive) side.
double predict_progression(std::span<const double> query, const GlobalPrototypeStore& store);

// Progressive iff prob > 0.5.
Progression classify(double prob);

nlohmann::json store_to_json(const GlobalPrototypeStore& store);
GlobalPrototypeStore store_from_json(const nlohmann::json& j);
void save_store(const GlobalPrototypeStore& store, const std::filesystem::path& path);
GlobalPrototypeStore load_store(const std::filesystem::path& path);

}  // namespace ordproto
