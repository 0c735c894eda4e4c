#include "diffscribe/train.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "diffscribe/decode.hpp"
#include "diffscribe/errors.hpp"
#include "diffscribe/eval.hpp"

namespace diffscribe {

double train_epoch(const std::vector<EncodedExample>& train_set, ParamsF& params,
                   AdamState<float>& opt, const TrainConfig& config, std::mt19937_64& rng) {
  if (train_set.empty()) throw std::invalid_argument("empty training set");
  const HyperParams& hyper = config.hyper;
  const ModelDims dims = params.dims();

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  ForwardOptions fwd;
  fwd.train = true;
  fwd.dropout_p = hyper.dropout_p;
  fwd.rng = &rng;

  double total_nll = 0;
  std::int64_t total_tokens = 0;
  const std::size_t batch_size = static_cast<std::size_t>(std::max(1, hyper.batch_size));
  std::size_t batch_index = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size, ++batch_index) {
    const std::size_t end = std::min(begin + batch_size, order.size());
    ParamsF grads = ParamsF::zeros(dims);
    for (std::size_t k = begin; k < end; ++k) {
      const EncodedExample& ex = train_set[order[k]];
      ForwardTrace<float> trace;
      total_nll += forward_loss<float>(ex, params, fwd, &trace);
      total_tokens += static_cast<std::int64_t>(trace.steps.size());
      accumulate(grads, backward(trace, params));
    }
    try {
      apply_gradients(params, grads, opt, hyper);
    } catch (const NonFiniteGradientError& e) {
      throw NonFiniteGradientError(std::string(e.what()) + " (batch " +
                                   std::to_string(batch_index) + ")");
    }
    if (config.log_every > 0 && (batch_index + 1) % static_cast<std::size_t>(config.log_every) == 0)
      std::fprintf(stderr, "  batch %zu, running nll/token %.4f\n", batch_index + 1,
                   total_nll / static_cast<double>(std::max<std::int64_t>(1, total_tokens)));
  }
  return total_nll / static_cast<double>(std::max<std::int64_t>(1, total_tokens));
}

ValidationResult validate(const std::vector<EncodedExample>& valid_set,
                          const ParamsF& params, int decode_max_len) {
  ValidationResult result;
  if (valid_set.empty()) return result;

  ForwardOptions fwd;  // inference: dropout disabled
  std::int64_t positions = 0, matches = 0;
  double total_nll = 0;
  double meteor_sum = 0;
  for (const EncodedExample& ex : valid_set) {
    ForwardTrace<float> trace;
    total_nll += forward_loss<float>(ex, params, fwd, &trace);
    for (const StepTrace<float>& step : trace.steps) {
      Eigen::Index argmax = 0;
      step.prob.maxCoeff(&argmax);
      if (static_cast<TokenId>(argmax) == step.target_id) ++matches;
      ++positions;
    }

    const GreedyResult decoded = greedy_decode(ex.code_ids, params, decode_max_len);
    // Reference = NL ids without the START/END boundaries.
    std::vector<TokenId> reference(ex.nl_ids.begin() + 1, ex.nl_ids.end() - 1);
    meteor_sum += meteor_exact(decoded.token_ids, reference);
  }
  result.token_accuracy =
      positions > 0 ? static_cast<double>(matches) / static_cast<double>(positions) : 0.0;
  result.mean_nll = positions > 0 ? total_nll / static_cast<double>(positions) : 0.0;
  result.meteor = meteor_sum / static_cast<double>(valid_set.size());
  return result;
}

namespace {

void append_epoch_log(const std::string& path, const EpochStats& stats) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append epoch log: " + path);
  nlohmann::json obj;
  obj["epoch"] = stats.epoch;
  obj["train_nll"] = stats.train_nll;
  obj["val_accuracy"] = stats.val_accuracy;
  obj["val_meteor"] = stats.val_meteor;
  obj["val_nll"] = stats.val_nll;
  obj["wall_seconds"] = stats.wall_seconds;
  out << obj.dump() << '\n';
}

EpochRecord to_record(const EpochStats& stats) {
  return {stats.epoch, stats.train_nll, stats.val_accuracy, stats.val_meteor,
          stats.val_nll};
}

}  // namespace

FitResult fit(const std::vector<EncodedExample>& train_set,
              const std::vector<EncodedExample>& valid_set, int nl_vocab_size,
              int code_vocab_size, const TrainConfig& config,
              const ValidateFn& validate_override) {
  if (train_set.empty()) throw std::invalid_argument("empty training set");
  if (config.hyper.max_epochs < 1)
    throw std::invalid_argument("nothing to train: max_epochs < 1");
  if (config.patience < 1) throw std::invalid_argument("patience must be >= 1");

  const HyperParams& hyper = config.hyper;
  const ModelDims dims{nl_vocab_size, code_vocab_size, hyper.d_embed, hyper.d_hidden};
  ParamsF params = init_params<float>(dims, hyper.seed);
  AdamState<float> opt = AdamState<float>::zeros(dims);
  std::mt19937_64 rng(hyper.seed);

  FitResult result;
  result.best_params = params;
  int stale_epochs = 0;

  for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double train_nll = train_epoch(train_set, params, opt, config, rng);
    const ValidationResult val =
        validate_override ? validate_override(params, epoch) : validate(valid_set, params);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    EpochStats stats{epoch, train_nll, val.token_accuracy, val.meteor, val.mean_nll, wall};
    result.history.push_back(stats);
    append_epoch_log(config.log_path, stats);
    if (config.log_every > 0)
      std::fprintf(stderr,
                   "epoch %d: train nll/token %.4f, val acc %.4f, val METEOR %.4f\n",
                   epoch, train_nll, val.token_accuracy, val.meteor);

    if (val.meteor > result.best_meteor) {
      result.best_meteor = val.meteor;
      result.best_epoch = epoch;
      result.best_params = params;
      stale_epochs = 0;
      if (!config.checkpoint_path.empty()) {
        Checkpoint ckpt;
        ckpt.hyper = hyper;
        ckpt.nl_vocab = nl_vocab_size;
        ckpt.code_vocab = code_vocab_size;
        for (const EpochStats& s : result.history) ckpt.history.push_back(to_record(s));
        ckpt.params = params;
        save_checkpoint(ckpt, config.checkpoint_path);
      }
    } else if (++stale_epochs >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace diffscribe
