#include "ordproto/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "ordproto/errors.hpp"

namespace ordproto {

void GenerationConfig::validate() const {
  if (num_classes < 3) throw BadConfigError("classes", "need at least 3 classes");
  if (class_counts.size() != static_cast<std::size_t>(num_classes)) {
    throw BadConfigError("class_counts", "need one count per class");
  }
  for (int c : class_counts) {
    if (c < 1) throw BadConfigError("class_counts", "every class needs at least one sample");
  }
  if (input_dim < 1) throw BadConfigError("input_dim", "must be >= 1");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw BadConfigError("noise", "must be >= 0");
  if (!(max_frequency >= 0.0) || !std::isfinite(max_frequency)) {
    throw BadConfigError("max_frequency", "must be >= 0");
  }
  if (band_edges.size() != static_cast<std::size_t>(num_classes - 1)) {
    throw BadConfigError("band_edges", "need classes - 1 interior boundaries");
  }
  double prev = 0.0;
  for (double e : band_edges) {
    if (!(e > prev && e < 1.0)) {
      throw BadConfigError("band_edges", "boundaries must increase strictly inside (0, 1)");
    }
    prev = e;
  }
  if (!(progression_cut > 0.0 && progression_cut < 1.0)) {
    throw BadConfigError("progression_cut", "must lie inside (0, 1)");
  }
  if (middle_classes.empty()) throw BadConfigError("middle_classes", "must not be empty");
  for (int m : middle_classes) {
    if (m <= 1 || m >= num_classes) {
      throw BadConfigError("middle_classes", "entries must be strictly between 1 and classes");
    }
  }
}

GenerationConfig GenerationConfig::for_classes(int num_classes) {
  GenerationConfig c;
  c.num_classes = num_classes;
  if (num_classes < 1) return c;
  c.class_counts.assign(static_cast<std::size_t>(num_classes), 200);
  c.band_edges.clear();
  for (int k = 1; k < num_classes; ++k) c.band_edges.push_back(static_cast<double>(k) / num_classes);
  c.middle_classes.clear();
  for (int k = 2; k < num_classes; ++k) c.middle_classes.push_back(k);
  return c;
}

int SyntheticOrdinalDataset::input_dim() const {
  return samples.empty() ? config.input_dim : static_cast<int>(samples.front().x.size());
}

int SyntheticOrdinalDataset::num_classes() const {
  int k = 0;
  for (const Sample& s : samples) k = std::max(k, s.coarse_label);
  return std::max(k, config.num_classes);
}

std::vector<int> SyntheticOrdinalDataset::coarse_labels() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(s.coarse_label);
  return out;
}

SyntheticOrdinalDataset SyntheticOrdinalDataset::subset(std::span<const std::size_t> indices) const {
  SyntheticOrdinalDataset out;
  out.config = config;
  out.seed = seed;
  out.samples.reserve(indices.size());
  for (std::size_t i : indices) out.samples.push_back(samples.at(i));
  return out;
}

TrainingSet training_view(const SyntheticOrdinalDataset& ds) {
  if (ds.samples.empty()) throw EmptyInputError("training_view: empty dataset");
  TrainingSet t;
  t.num_classes = ds.num_classes();
  t.inputs = DenseMatrix(ds.size(), static_cast<std::size_t>(ds.input_dim()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sample& s = ds.samples[i];
    if (s.x.size() != t.inputs.cols()) throw DimMismatchError("training_view: ragged inputs");
    std::copy(s.x.begin(), s.x.end(), t.inputs.row(i).begin());
    t.labels.push_back(s.coarse_label);
  }
  return t;
}

Vector trajectory(double t, int input_dim, double max_frequency) {
  Vector x(static_cast<std::size_t>(input_dim));
  x[0] = 2.0 * t - 1.0;
  // coordinate j oscillates at max_frequency * j / (input_dim - 1), phase j
  const double step = input_dim > 1 ? max_frequency / (input_dim - 1) : 0.0;
  for (int j = 1; j < input_dim; ++j) {
    x[static_cast<std::size_t>(j)] = std::sin(std::numbers::pi * step * j * t + j);
  }
  return x;
}

SyntheticOrdinalDataset generate(const GenerationConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::set<int> middle(config.middle_classes.begin(), config.middle_classes.end());

  SyntheticOrdinalDataset ds;
  ds.config = config;
  ds.seed = seed;
  for (int k = 1; k <= config.num_classes; ++k) {
    const double lo = k == 1 ? 0.0 : config.band_edges[static_cast<std::size_t>(k - 2)];
    const double hi = k == config.num_classes ? 1.0 : config.band_edges[static_cast<std::size_t>(k - 1)];
    std::uniform_real_distribution<double> band(lo, hi);
    for (int n = 0; n < config.class_counts[static_cast<std::size_t>(k - 1)]; ++n) {
      Sample s;
      s.coarse_label = k;
      s.latent_t = band(rng);
      s.x = trajectory(s.latent_t, config.input_dim, config.max_frequency);
      for (double& v : s.x) v += config.noise * noise(rng);
      if (middle.contains(k)) {
        s.fine_label = s.latent_t >= config.progression_cut ? Progression::Progressive
                                                            : Progression::Stable;
      }
      ds.samples.push_back(std::move(s));
    }
  }
  std::shuffle(ds.samples.begin(), ds.samples.end(), rng);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) ds.samples[i].id = static_cast<int>(i);
  return ds;
}

namespace {

std::vector<std::vector<std::size_t>> group_by_class(std::span<const int> labels, int num_classes) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || labels[i] > num_classes) {
      throw LabelOutOfRangeError("label " + std::to_string(labels[i]) + " outside 1.." +
                                 std::to_string(num_classes));
    }
    by_class[static_cast<std::size_t>(labels[i] - 1)].push_back(i);
  }
  return by_class;
}

}  // namespace

std::vector<std::vector<std::size_t>> stratified_batches(std::span<const int> labels,
                                                         int num_classes, int batch_size,
                                                         std::uint64_t seed) {
  if (batch_size < num_classes) {
    throw BatchTooSmallError("batch size " + std::to_string(batch_size) + " is smaller than " +
                             std::to_string(num_classes) + " classes");
  }
  const auto by_class = group_by_class(labels, num_classes);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) {
      throw DegenerateBatchError("class " + std::to_string(c + 1) + " has no samples");
    }
  }
  const std::size_t k = by_class.size();
  const std::size_t m = static_cast<std::size_t>(batch_size);
  const std::size_t n = labels.size();

  // Smallest batch count whose slots fit every sample once and one sample of
  // every class per batch.
  std::size_t batches = (n + m - 1) / m;
  auto required = [&](std::size_t b) {
    std::size_t total = 0;
    for (const auto& cls : by_class) total += std::max(cls.size(), b);
    return total;
  };
  while (required(batches) > batches * m) ++batches;

  std::vector<std::size_t> draws(k);
  for (std::size_t c = 0; c < k; ++c) draws[c] = std::max(by_class[c].size(), batches);
  // Leftover slots go round-robin to classes in order of decreasing size.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return by_class[a].size() > by_class[b].size();
  });
  for (std::size_t extra = batches * m - required(batches), i = 0; extra > 0; --extra, ++i) {
    ++draws[order[i % k]];
  }

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> streams(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& stream = streams[c];
    while (stream.size() < draws[c]) {
      std::vector<std::size_t> perm = by_class[c];
      std::shuffle(perm.begin(), perm.end(), rng);
      const std::size_t take = std::min(perm.size(), draws[c] - stream.size());
      stream.insert(stream.end(), perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(take));
    }
  }

  std::vector<std::vector<std::size_t>> out(batches);
  std::vector<std::size_t> rest;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t b = 0; b < batches; ++b) out[b].push_back(streams[c][b]);
    rest.insert(rest.end(), streams[c].begin() + static_cast<std::ptrdiff_t>(batches),
                streams[c].end());
  }
  std::shuffle(rest.begin(), rest.end(), rng);
  const std::size_t fill = m - k;
  for (std::size_t b = 0; b < batches; ++b) {
    out[b].insert(out[b].end(), rest.begin() + static_cast<std::ptrdiff_t>(b * fill),
                  rest.begin() + static_cast<std::ptrdiff_t>((b + 1) * fill));
    std::shuffle(out[b].begin(), out[b].end(), rng);
  }
  return out;
}

std::vector<int> kfold_split(std::span<const int> labels, int num_classes, int k,
                             std::uint64_t seed) {
  if (k < 2) throw BadKError("k must be >= 2, got " + std::to_string(k));
  auto by_class = group_by_class(labels, num_classes);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < static_cast<std::size_t>(k)) {
      throw BadKError("class " + std::to_string(c + 1) + " has fewer than " + std::to_string(k) +
                      " samples");
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<int> folds(labels.size(), 0);
  std::size_t pos = 0;
  for (auto& cls : by_class) {
    std::shuffle(cls.begin(), cls.end(), rng);
    for (std::size_t idx : cls) folds[idx] = static_cast<int>(pos++ % static_cast<std::size_t>(k)) + 1;
  }
  return folds;
}

namespace {

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_real(std::string_view s, std::size_t line, const std::string& column) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(line, "column '" + column + "': bad real '" + std::string(s) + "'");
  }
  return v;
}

int parse_int(std::string_view s, std::size_t line, const std::string& column) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(line, "column '" + column + "': bad integer '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

void save_dataset(const SyntheticOrdinalDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "id,coarse_label,fine_label,latent_t";
  for (int j = 0; j < ds.input_dim(); ++j) out << ",x" << j;
  out << '\n';
  for (const Sample& s : ds.samples) {
    out << s.id << ',' << s.coarse_label << ','
        << (s.fine_label ? to_string(*s.fine_label) : std::string()) << ','
        << format_real(s.latent_t);
    for (double v : s.x) out << ',' << format_real(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

SyntheticOrdinalDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(std::string(header[i]), i);
  for (const char* name : {"id", "coarse_label", "fine_label", "latent_t", "x0"}) {
    if (!col.contains(name)) throw ParseError(1, std::string("missing column '") + name + "'");
  }
  std::vector<std::size_t> xcols;
  for (int j = 0;; ++j) {
    const auto it = col.find("x" + std::to_string(j));
    if (it == col.end()) break;
    xcols.push_back(it->second);
  }

  SyntheticOrdinalDataset ds;
  std::set<int> middle;
  std::map<int, int> counts;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                   std::to_string(cells.size()));
    }
    Sample s;
    s.id = parse_int(cells[col.at("id")], lineno, "id");
    s.coarse_label = parse_int(cells[col.at("coarse_label")], lineno, "coarse_label");
    if (s.coarse_label < 1) throw ParseError(lineno, "column 'coarse_label': must be >= 1");
    s.latent_t = parse_real(cells[col.at("latent_t")], lineno, "latent_t");
    const std::string_view fine = cells[col.at("fine_label")];
    if (fine == "stable") {
      s.fine_label = Progression::Stable;
    } else if (fine == "progressive") {
      s.fine_label = Progression::Progressive;
    } else if (!fine.empty()) {
      throw ParseError(lineno, "column 'fine_label': unknown value '" + std::string(fine) + "'");
    }
    if (s.fine_label) middle.insert(s.coarse_label);
    for (std::size_t j = 0; j < xcols.size(); ++j) {
      s.x.push_back(parse_real(cells[xcols[j]], lineno, "x" + std::to_string(j)));
    }
    ++counts[s.coarse_label];
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw ParseError(lineno, "no data rows");

  ds.config = GenerationConfig::for_classes(ds.num_classes());
  ds.config.input_dim = static_cast<int>(xcols.size());
  for (int k = 1; k <= ds.config.num_classes; ++k) {
    ds.config.class_counts[static_cast<std::size_t>(k - 1)] = counts[k];
  }
  if (!middle.empty()) ds.config.middle_classes.assign(middle.begin(), middle.end());
  return ds;
}

}  // namespace ordproto
