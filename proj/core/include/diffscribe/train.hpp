#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "diffscribe/checkpoint.hpp"
#include "diffscribe/model.hpp"

namespace diffscribe {

struct TrainConfig {
  HyperParams hyper;
  int patience = 10;            // epochs without a METEOR gain before stopping
  std::string checkpoint_path;  // empty: keep the best model in memory only
  std::string log_path;         // epoch JSONL log; empty: no log
  int log_every = 0;            // batches between progress lines; 0: quiet
};

struct EpochStats {
  int epoch = 0;
  double train_nll = 0;  // mean per target token
  double val_accuracy = 0;
  double val_meteor = 0;
  double val_nll = 0;
  double wall_seconds = 0;
};

struct ValidationResult {
  double token_accuracy = 0;
  double meteor = 0;
  double mean_nll = 0;
};

// One pass over seeded-shuffled minibatches with teacher forcing; fresh
// dropout masks per example per step; gradients accumulated in example order,
// one optimizer step per batch. Returns the mean nll per target token.
// NonFiniteGradientError is reported with the failing batch index.
double train_epoch(const std::vector<EncodedExample>& train_set, ParamsF& params,
                   AdamState<float>& opt, const TrainConfig& config, std::mt19937_64& rng);

// Dropout-free teacher-forced accuracy and mean nll, plus METEOR between the
// greedy decodes and the references.
ValidationResult validate(const std::vector<EncodedExample>& valid_set,
                          const ParamsF& params, int decode_max_len = 20);

struct FitResult {
  ParamsF best_params;
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_meteor = -1.0;
};

// Test seam: lets the selection/early-stop logic be driven by a scripted
// metric sequence.
using ValidateFn = std::function<ValidationResult(const ParamsF& params, int epoch)>;

// Full training run: per-epoch validation, checkpoint whenever validation
// METEOR strictly improves, early stop after `patience` stale epochs, and the
// best checkpointed model returned.
FitResult fit(const std::vector<EncodedExample>& train_set,
              const std::vector<EncodedExample>& valid_set, int nl_vocab_size,
              int code_vocab_size, const TrainConfig& config,
              const ValidateFn& validate_override = nullptr);

}  // namespace diffscribe
