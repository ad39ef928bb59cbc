#include "ordproto/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "ordproto/errors.hpp"

namespace ordproto {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view s) {
  s = trim(s);
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw BadConfigError(std::string(key), "cannot parse '" + std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw BadConfigError(std::string(key), "expected true/false, got '" + std::string(s) + "'");
}

template <typename T>
std::vector<T> parse_array(std::string_view key, std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw BadConfigError(std::string(key), "unterminated array");
    s = trim(s.substr(1, s.size() - 2));
  }
  std::vector<T> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(parse_number<T>(key, s.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"classes", [](ExperimentConfig&, std::string_view, std::string_view) {}},
      {"class_counts",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.generation.class_counts = parse_array<int>(k, v);
       }},
      {"input_dim",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.generation.input_dim = parse_number<int>(k, v);
       }},
      {"noise",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.generation.noise = parse_number<double>(k, v);
       }},
      {"max_frequency",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.generation.max_frequency = parse_number<double>(k, v);
       }},
      {"band_edges",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.generation.band_edges = parse_array<double>(k, v);
       }},
      {"progression_cut",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.generation.progression_cut = parse_number<double>(k, v);
       }},
      {"middle_classes",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.generation.middle_classes = parse_array<int>(k, v);
       }},
      {"epochs",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.epochs = parse_number<int>(k, v);
       }},
      {"batch_size",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.batch_size = parse_number<int>(k, v);
       }},
      {"hidden",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.hidden = parse_array<int>(k, v);
       }},
      {"feature_dim",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.feature_dim = parse_number<int>(k, v);
       }},
      {"lr",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.adam.base_lr = parse_number<double>(k, v);
       }},
      {"lr_decay",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.adam.lr_decay = parse_number<double>(k, v);
       }},
      {"beta1",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.adam.beta1 = parse_number<double>(k, v);
       }},
      {"beta2",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.adam.beta2 = parse_number<double>(k, v);
       }},
      {"adam_eps",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.adam.eps = parse_number<double>(k, v);
       }},
      {"sigma",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.sigma = parse_number<double>(k, v);
       }},
      {"use_ema",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.use_ema = parse_bool(k, v);
       }},
      {"lambda_start",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.lambda_start = parse_number<double>(k, v);
       }},
      {"lambda_mode",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         v = trim(v);
         if (v == "iteration") {
           c.training.lambda_mode = LambdaMode::Iteration;
         } else if (v == "epoch") {
           c.training.lambda_mode = LambdaMode::Epoch;
         } else {
           throw BadConfigError(std::string(k), "expected 'iteration' or 'epoch'");
         }
       }},
      {"blackbox_lambda",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.blackbox.lambda_interp = parse_number<double>(k, v);
       }},
      {"use_ins2ins",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.switches.ins2ins = parse_bool(k, v);
       }},
      {"use_ins2cls",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.switches.ins2cls = parse_bool(k, v);
       }},
      {"use_cls2cls",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.switches.cls2cls = parse_bool(k, v);
       }},
      {"detach_dispersion",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.detach_dispersion = parse_bool(k, v);
       }},
      {"dispersion_eps",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.dispersion_eps = parse_number<double>(k, v);
       }},
      {"anchor_low",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.anchor_classes.first = parse_number<int>(k, v);
       }},
      {"anchor_high",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.anchor_classes.second = parse_number<int>(k, v);
       }},
      {"seeds",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.seeds = parse_array<std::uint64_t>(k, v);
       }},
  };
  return table;
}

ExperimentConfig defaults_for(int num_classes) {
  ExperimentConfig c;
  c.generation = GenerationConfig::for_classes(num_classes);
  c.training.num_classes = num_classes;
  c.training.anchor_classes = {1, num_classes};
  return c;
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::set<std::string, std::less<>> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw BadConfigError(std::string(line), "line " + std::to_string(lineno) +
                                                  ": expected 'key = value'");
    }
    std::string key(trim(line.substr(0, eq)));
    if (!setters().contains(key)) throw BadConfigError(key, "unknown key");
    if (!seen.insert(key).second) throw BadConfigError(key, "given more than once");
    entries.emplace_back(std::move(key), std::string(trim(line.substr(eq + 1))));
  }

  int num_classes = 3;
  for (const auto& [key, value] : entries) {
    if (key == "classes") num_classes = parse_number<int>(key, value);
  }
  if (num_classes < 3) throw BadConfigError("classes", "need at least 3 classes");
  ExperimentConfig c = defaults_for(num_classes);
  for (const auto& [key, value] : entries) setters().find(key)->second(c, key, value);
  c.generation.validate();
  c.training.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string render_config(const ExperimentConfig& config) {
  const GenerationConfig& g = config.generation;
  const TrainConfig& t = config.training;
  std::ostringstream out;
  out << "# data\n"
      << "classes = " << g.num_classes << '\n'
      << "class_counts = " << join(g.class_counts) << '\n'
      << "input_dim = " << g.input_dim << '\n'
      << "noise = " << fmt(g.noise) << '\n'
      << "max_frequency = " << fmt(g.max_frequency) << '\n'
      << "band_edges = " << join(g.band_edges) << '\n'
      << "progression_cut = " << fmt(g.progression_cut) << '\n'
      << "middle_classes = " << join(g.middle_classes) << '\n'
      << "# model and optimizer\n"
      << "hidden = " << join(t.hidden) << '\n'
      << "feature_dim = " << t.feature_dim << '\n'
      << "epochs = " << t.epochs << '\n'
      << "batch_size = " << t.batch_size << '\n'
      << "lr = " << fmt(t.adam.base_lr) << '\n'
      << "lr_decay = " << fmt(t.adam.lr_decay) << '\n'
      << "beta1 = " << fmt(t.adam.beta1) << '\n'
      << "beta2 = " << fmt(t.adam.beta2) << '\n'
      << "adam_eps = " << fmt(t.adam.eps) << '\n'
      << "# ordinal losses\n"
      << "use_ins2ins = " << (t.switches.ins2ins ? "true" : "false") << '\n'
      << "use_ins2cls = " << (t.switches.ins2cls ? "true" : "false") << '\n'
      << "use_cls2cls = " << (t.switches.cls2cls ? "true" : "false") << '\n'
      << "lambda_start = " << fmt(t.lambda_start) << '\n'
      << "lambda_mode = " << (t.lambda_mode == LambdaMode::Iteration ? "iteration" : "epoch")
      << '\n'
      << "blackbox_lambda = " << fmt(t.blackbox.lambda_interp) << '\n'
      << "detach_dispersion = " << (t.detach_dispersion ? "true" : "false") << '\n'
      << "dispersion_eps = " << fmt(t.dispersion_eps) << '\n'
      << "# prototypes\n"
      << "sigma = " << fmt(t.sigma) << '\n'
      << "use_ema = " << (t.use_ema ? "true" : "false") << '\n'
      << "anchor_low = " << t.anchor_classes.first << '\n'
      << "anchor_high = " << t.anchor_classes.second << '\n'
      << "seeds = " << join(t.seeds) << '\n';
  return out.str();
}

}  // namespace ordproto
