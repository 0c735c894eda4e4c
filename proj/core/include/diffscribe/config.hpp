#pragma once

#include <array>
#include <string>

#include "diffscribe/diff.hpp"
#include "diffscribe/model.hpp"
#include "diffscribe/tokenize.hpp"

namespace diffscribe {

// Everything the CLI can be told, with the shipped defaults. Precedence:
// command-line flags > config file > defaults.
struct RunConfig {
  TokenizerConfig tokenizer;
  HyperParams hyper;
  int patience = 10;
  int log_every = 0;

  DatasetVariant variant = DatasetVariant::Atomic;
  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};

  int beam_width = 10;
  int max_len = 20;
  bool mask_unk = false;

  std::string commits_dir;
  std::string dataset_dir;
  std::string checkpoint;
  std::string out;
};

// Reads a flat JSON object, applying defaults for absent keys. Unknown keys
// are rejected (BadConfigError naming the key), as are ill-typed values.
RunConfig load_config(const std::string& path);
RunConfig parse_config_json(const std::string& json_text);

// Resolved config as a single JSON line, for echoing to the log.
std::string config_to_json(const RunConfig& config);

}  // namespace diffscribe
