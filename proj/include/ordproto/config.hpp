#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "ordproto/data.hpp"
#include "ordproto/trainer.hpp"

namespace ordproto {

// One experiment: how to synthesize the cohort and how to train on it.
struct ExperimentConfig {
  GenerationConfig generation;
  TrainConfig training;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Flat `key = value` text. '#' starts a comment; arrays are comma separated,
// optionally wrapped in brackets. Unknown or repeated keys and ill-typed
// values throw BadConfigError naming the key. Setting `classes` resets the
// class-dependent keys (counts, bands, middle classes, anchors) to their
// defaults for that many classes before the other keys apply.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical text form; parse_config(render_config(c)) == c.
std::string render_config(const ExperimentConfig& config);

}  // namespace ordproto
