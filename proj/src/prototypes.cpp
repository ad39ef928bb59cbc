#include "ordproto/prototypes.hpp"

#include <cmath>
#include <fstream>

#include "ordproto/errors.hpp"
#include "ordproto/json_io.hpp"

namespace ordproto {

std::string to_string(Progression p) {
  return p == Progression::Progressive ? "progressive" : "stable";
}

GlobalPrototypeStore GlobalPrototypeStore::make(int dim, double sigma,
                                                std::pair<int, int> anchor_classes) {
  if (dim < 1) throw BadDimsError("prototype store: dim must be >= 1");
  if (!(sigma > 0.0 && sigma < 1.0)) {
    throw OutOfRangeError("prototype store: sigma must lie strictly inside (0, 1)");
  }
  if (anchor_classes.first == anchor_classes.second || anchor_classes.first < 1 ||
      anchor_classes.second < 1) {
    throw OutOfRangeError("prototype store: anchor classes must be distinct and >= 1");
  }
  GlobalPrototypeStore s;
  s.dim = dim;
  s.sigma = sigma;
  s.anchor_classes = anchor_classes;
  s.anchor_low.assign(static_cast<std::size_t>(dim), 0.0);
  s.anchor_high.assign(static_cast<std::size_t>(dim), 0.0);
  return s;
}

bool GlobalPrototypeStore::trained() const {
  return norm(anchor_low) > kZeroNormEps && norm(anchor_high) > kZeroNormEps;
}

namespace {

void ema_into(Vector& p, std::span<const double> mu, double sigma) {
  if (mu.size() != p.size()) throw DimMismatchError("ema_update: local prototype dim mismatch");
  const double nmu = norm(mu);
  if (nmu <= kZeroNormEps) throw ZeroVectorError("ema_update: zero local prototype");
  const double np = norm(p);
  if (np <= kZeroNormEps) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = mu[i] / nmu;
    return;
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = sigma * (p[i] / np) + (1.0 - sigma) * (mu[i] / nmu);
  }
}

}  // namespace

GlobalPrototypeStore ema_update(GlobalPrototypeStore store, std::span<const double> mu_low,
                                std::span<const double> mu_high) {
  ema_into(store.anchor_low, mu_low, store.sigma);
  ema_into(store.anchor_high, mu_high, store.sigma);
  return store;
}

double predict_progression(std::span<const double> query, const GlobalPrototypeStore& store) {
  if (!store.trained()) throw UntrainedStoreError("predict_progression: anchors are zero");
  const double c_high = cosine_similarity(query, store.anchor_high);
  const double c_low = cosine_similarity(query, store.anchor_low);
  // exp(c_high) / (exp(c_high) + exp(c_low))
  return 1.0 / (1.0 + std::exp(c_low - c_high));
}

Progression classify(double prob) {
  if (!(prob >= 0.0 && prob <= 1.0)) {
    throw OutOfRangeError("classify: probability outside [0, 1]");
  }
  return prob > 0.5 ? Progression::Progressive : Progression::Stable;
}

nlohmann::json store_to_json(const GlobalPrototypeStore& store) {
  nlohmann::json j;
  j["dim"] = store.dim;
  j["sigma"] = store.sigma;
  j["anchor_classes"] = {store.anchor_classes.first, store.anchor_classes.second};
  j["anchor_low"] = store.anchor_low;
  j["anchor_high"] = store.anchor_high;
  return j;
}

GlobalPrototypeStore store_from_json(const nlohmann::json& j) {
  try {
    GlobalPrototypeStore s;
    s.dim = j.at("dim").get<int>();
    s.sigma = j.at("sigma").get<double>();
    const auto& ac = j.at("anchor_classes");
    s.anchor_classes = {ac.at(0).get<int>(), ac.at(1).get<int>()};
    s.anchor_low = j.at("anchor_low").get<Vector>();
    s.anchor_high = j.at("anchor_high").get<Vector>();
    if (s.anchor_low.size() != static_cast<std::size_t>(s.dim) ||
        s.anchor_high.size() != static_cast<std::size_t>(s.dim)) {
      throw DimMismatchError("prototype store: anchor length does not match dim");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, std::string("prototype store: ") + e.what());
  }
}

void save_store(const GlobalPrototypeStore& store, const std::filesystem::path& path) {
  write_json_file(store_to_json(store), path);
}

GlobalPrototypeStore load_store(const std::filesystem::path& path) {
  return store_from_json(read_json_file(path));
}

}  // namespace ordproto
