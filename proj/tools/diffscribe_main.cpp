#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "diffscribe/checkpoint.hpp"
#include "diffscribe/commits.hpp"
#include "diffscribe/config.hpp"
#include "diffscribe/dataset.hpp"
#include "diffscribe/decode.hpp"
#include "diffscribe/errors.hpp"
#include "diffscribe/eval.hpp"
#include "diffscribe/model.hpp"
#include "diffscribe/tokenize.hpp"
#include "diffscribe/train.hpp"

namespace fs = std::filesystem;
using namespace diffscribe;

namespace {

struct SplitPaths {
  fs::path train, valid, test, nl_vocab, code_vocab, stats;
};

SplitPaths dataset_paths(const std::string& dir) {
  fs::path base(dir);
  return {base / "train.jsonl", base / "valid.jsonl",  base / "test.jsonl",
          base / "nl.vocab",    base / "code.vocab",   base / "stats.json"};
}

EncodedExample encode_example(const Example& ex, const Vocabulary& nl_vocab,
                              const Vocabulary& code_vocab) {
  EncodedExample enc;
  enc.commit_id = ex.commit_id;
  enc.code_ids = code_vocab.encode(ex.code_tokens, /*add_boundaries=*/false);
  enc.nl_ids = nl_vocab.encode(ex.nl_tokens, /*add_boundaries=*/true);
  return enc;
}

std::vector<EncodedExample> encode_all(const std::vector<Example>& examples,
                                       const Vocabulary& nl_vocab,
                                       const Vocabulary& code_vocab) {
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (const Example& ex : examples) out.push_back(encode_example(ex, nl_vocab, code_vocab));
  return out;
}

// Flags beat config-file values, which beat defaults.
template <typename T, typename U>
void overlay(const std::optional<T>& flag, U& into) {
  if (flag) into = static_cast<U>(*flag);
}

struct CommonFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> variant;
  std::optional<std::uint64_t> seed;
  std::optional<int> beam;
  std::optional<int> max_len;
  bool no_unk = false;
  std::optional<std::string> checkpoint;
  std::optional<std::string> out;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--variant", variant,
                    "dataset variant: atomic|full|uniaction-add|uniaction-remove");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--beam", beam, "beam width (1 = greedy)");
    cmd->add_option("--max-len", max_len, "maximum generated tokens");
    cmd->add_flag("--no-unk", no_unk, "mask the UNK logit during generation");
    cmd->add_option("--checkpoint", checkpoint, "model checkpoint path");
    cmd->add_option("--out", out, "output path");
  }

  RunConfig resolve() const {
    RunConfig config = config_path ? load_config(*config_path) : RunConfig{};
    if (variant) config.variant = variant_from_string(*variant);
    overlay(seed, config.hyper.seed);
    overlay(beam, config.beam_width);
    overlay(max_len, config.max_len);
    if (no_unk) config.mask_unk = true;
    overlay(checkpoint, config.checkpoint);
    overlay(out, config.out);
    std::cerr << "config: " << config_to_json(config) << "\n";
    return config;
  }
};

int cmd_extract(const CommonFlags& flags, const std::string& repo) {
  RunConfig config = flags.resolve();
  if (config.out.empty()) throw BadConfigError("extract needs --out DIR");
  const ExtractStats stats = extract_repo(repo, config.out);
  std::printf("extracted %d commits from %s to %s (%d merge commits skipped)\n",
              stats.commits, repo.c_str(), config.out.c_str(), stats.skipped_merges);
  return 0;
}

int cmd_build(const CommonFlags& flags, const std::optional<std::string>& commits_flag) {
  RunConfig config = flags.resolve();
  overlay(commits_flag, config.commits_dir);
  if (config.commits_dir.empty()) throw BadConfigError("build needs --commits DIR");
  if (config.out.empty() && config.dataset_dir.empty())
    throw BadConfigError("build needs --out DIR");
  const std::string out_dir = config.out.empty() ? config.dataset_dir : config.out;

  const std::vector<RawCommit> commits = load_commit_store(config.commits_dir);
  BuildStats stats;
  const std::vector<Example> examples =
      build_dataset(commits, config.variant, config.tokenizer, &stats);
  const DatasetSplits splits = split_dataset(examples, config.split_ratios, config.hyper.seed);

  std::vector<std::vector<std::string>> nl_train, code_train;
  for (const Example& ex : splits.train) {
    nl_train.push_back(ex.nl_tokens);
    code_train.push_back(ex.code_tokens);
  }
  const Vocabulary nl_vocab = Vocabulary::build(nl_train, config.tokenizer.nl_min_count);
  const Vocabulary code_vocab =
      Vocabulary::build(code_train, config.tokenizer.code_min_count);

  fs::create_directories(out_dir);
  const SplitPaths paths = dataset_paths(out_dir);
  write_examples_jsonl(splits.train, paths.train.string());
  write_examples_jsonl(splits.valid, paths.valid.string());
  write_examples_jsonl(splits.test, paths.test.string());
  nl_vocab.save(paths.nl_vocab.string());
  code_vocab.save(paths.code_vocab.string());

  nlohmann::json stats_json;
  stats_json["variant"] = to_string(config.variant);
  stats_json["seed"] = config.hyper.seed;
  stats_json["examples"] = examples.size();
  stats_json["train"] = splits.train.size();
  stats_json["valid"] = splits.valid.size();
  stats_json["test"] = splits.test.size();
  stats_json["commits_seen"] = stats.commits_seen;
  stats_json["atomic_commits"] = stats.atomic_commits;
  stats_json["atomic_fraction"] = stats.atomic_fraction();
  stats_json["skipped_malformed"] = stats.skipped_malformed;
  stats_json["skipped_binary"] = stats.skipped_binary;
  stats_json["skipped_variant"] = stats.skipped_variant;
  stats_json["skipped_empty_change"] = stats.skipped_empty_change;
  stats_json["skipped_empty_message"] = stats.skipped_empty_message;
  stats_json["skipped_code_too_long"] = stats.skipped_code_too_long;
  stats_json["skipped_nl_too_long"] = stats.skipped_nl_too_long;
  stats_json["nl_vocab"] = nl_vocab.size();
  stats_json["code_vocab"] = code_vocab.size();
  std::ofstream stats_out(paths.stats);
  stats_out << stats_json.dump(2) << "\n";

  std::printf(
      "built %s dataset under %s: %zu examples (train %zu / valid %zu / test %zu), "
      "atomic fraction %.3f\n",
      to_string(config.variant).c_str(), out_dir.c_str(), examples.size(),
      splits.train.size(), splits.valid.size(), splits.test.size(),
      stats.atomic_fraction());
  return 0;
}

int cmd_train(const CommonFlags& flags, const std::optional<std::string>& data_flag,
              const std::optional<int>& max_epochs_flag,
              const std::optional<std::string>& log_flag) {
  RunConfig config = flags.resolve();
  overlay(data_flag, config.dataset_dir);
  overlay(max_epochs_flag, config.hyper.max_epochs);
  if (config.dataset_dir.empty()) throw BadConfigError("train needs --data DIR");
  if (config.checkpoint.empty()) throw BadConfigError("train needs --checkpoint PATH");
  if (config.hyper.max_epochs < 1) {
    std::fprintf(stderr, "error: nothing to train (max_epochs = %d)\n",
                 config.hyper.max_epochs);
    return 1;
  }

  const SplitPaths paths = dataset_paths(config.dataset_dir);
  const Vocabulary nl_vocab = Vocabulary::load(paths.nl_vocab.string());
  const Vocabulary code_vocab = Vocabulary::load(paths.code_vocab.string());
  const auto train_set = encode_all(read_examples_jsonl(paths.train.string()),
                                    nl_vocab, code_vocab);
  const auto valid_set = encode_all(read_examples_jsonl(paths.valid.string()),
                                    nl_vocab, code_vocab);

  TrainConfig tc;
  tc.hyper = config.hyper;
  tc.patience = config.patience;
  tc.checkpoint_path = config.checkpoint;
  tc.log_path = log_flag ? *log_flag : config.checkpoint + ".log.jsonl";
  tc.log_every = config.log_every;

  const FitResult result = fit(train_set, valid_set, static_cast<int>(nl_vocab.size()),
                               static_cast<int>(code_vocab.size()), tc);
  std::printf("trained %zu epochs on %zu examples; best METEOR %.4f at epoch %d -> %s\n",
              result.history.size(), train_set.size(), result.best_meteor,
              result.best_epoch, config.checkpoint.c_str());
  return 0;
}

int cmd_generate(const CommonFlags& flags, const std::optional<std::string>& data_flag,
                 const std::string& split, bool greedy) {
  RunConfig config = flags.resolve();
  overlay(data_flag, config.dataset_dir);
  if (config.dataset_dir.empty()) throw BadConfigError("generate needs --data DIR");
  if (config.checkpoint.empty()) throw BadConfigError("generate needs --checkpoint PATH");
  if (config.out.empty()) throw BadConfigError("generate needs --out PATH");

  const SplitPaths paths = dataset_paths(config.dataset_dir);
  const Vocabulary nl_vocab = Vocabulary::load(paths.nl_vocab.string());
  const Vocabulary code_vocab = Vocabulary::load(paths.code_vocab.string());
  const Checkpoint ckpt =
      load_checkpoint(config.checkpoint, static_cast<int>(nl_vocab.size()),
                      static_cast<int>(code_vocab.size()));

  const fs::path split_path = split == "train"   ? paths.train
                              : split == "valid" ? paths.valid
                                                 : paths.test;
  const std::vector<Example> examples = read_examples_jsonl(split_path.string());

  std::ofstream out(config.out, std::ios::binary);
  if (!out) throw IoError("cannot write " + config.out);
  for (const Example& ex : examples) {
    const EncodedExample enc = encode_example(ex, nl_vocab, code_vocab);
    std::vector<TokenId> generated;
    double logprob = 0;
    bool finished = false;
    if (greedy || config.beam_width == 1) {
      GreedyResult res =
          greedy_decode(enc.code_ids, ckpt.params, config.max_len, config.mask_unk);
      generated = std::move(res.token_ids);
      logprob = res.logprob;
      finished = res.finished;
    } else {
      DecodeOptions opts{config.beam_width, config.max_len, config.mask_unk};
      const std::vector<Hypothesis> ranked = beam_search(enc.code_ids, ckpt.params, opts);
      const Hypothesis& top = ranked.front();
      generated = top.token_ids;
      if (top.finished) generated.pop_back();  // drop END
      logprob = top.logprob;
      finished = top.finished;
    }
    nlohmann::json obj;
    obj["commit_id"] = ex.commit_id;
    obj["candidate"] = nl_vocab.decode(generated);
    obj["reference"] = ex.nl_tokens;
    obj["logprob"] = logprob;
    obj["finished"] = finished;
    out << obj.dump() << '\n';
  }
  std::printf("generated %zu descriptions (%s, %s) -> %s\n", examples.size(),
              split.c_str(), greedy || config.beam_width == 1
                                 ? "greedy"
                                 : ("beam " + std::to_string(config.beam_width)).c_str(),
              config.out.c_str());
  return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& pairs_path) {
  RunConfig config = flags.resolve();
  if (config.out.empty()) throw BadConfigError("eval needs --out PATH");

  std::ifstream in(pairs_path, std::ios::binary);
  if (!in) throw IoError("cannot read " + pairs_path);
  std::vector<ScoredPair> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json obj = nlohmann::json::parse(line);
    if (!obj.contains("candidate")) continue;  // summary or foreign line
    ScoredPair pair;
    pair.candidate = obj.at("candidate").get<std::vector<std::string>>();
    pair.reference = obj.at("reference").get<std::vector<std::string>>();
    pairs.push_back(std::move(pair));
  }
  const CorpusScore score = corpus_evaluate(pairs);
  write_eval_report(pairs, score, config.out);
  std::printf("evaluated %zu pairs: mean BLEU-4 %.4f, mean METEOR %.4f -> %s\n",
              score.count, score.mean_bleu4, score.mean_meteor, config.out.c_str());
  return 0;
}

int cmd_heatmap(const CommonFlags& flags, const std::optional<std::string>& data_flag,
                const std::string& split, int index, bool use_reference) {
  RunConfig config = flags.resolve();
  overlay(data_flag, config.dataset_dir);
  if (config.dataset_dir.empty()) throw BadConfigError("heatmap needs --data DIR");
  if (config.checkpoint.empty()) throw BadConfigError("heatmap needs --checkpoint PATH");
  if (config.out.empty()) throw BadConfigError("heatmap needs --out PATH");

  const SplitPaths paths = dataset_paths(config.dataset_dir);
  const Vocabulary nl_vocab = Vocabulary::load(paths.nl_vocab.string());
  const Vocabulary code_vocab = Vocabulary::load(paths.code_vocab.string());
  const Checkpoint ckpt =
      load_checkpoint(config.checkpoint, static_cast<int>(nl_vocab.size()),
                      static_cast<int>(code_vocab.size()));

  const fs::path split_path = split == "train"   ? paths.train
                              : split == "valid" ? paths.valid
                                                 : paths.test;
  const std::vector<Example> examples = read_examples_jsonl(split_path.string());
  if (index < 0 || static_cast<std::size_t>(index) >= examples.size())
    throw BadConfigError("--index out of range, split has " +
                         std::to_string(examples.size()) + " examples");
  const EncodedExample enc = encode_example(examples[static_cast<std::size_t>(index)],
                                            nl_vocab, code_vocab);

  std::vector<TokenId> nl_ids;
  if (use_reference) {
    nl_ids.assign(enc.nl_ids.begin() + 1, enc.nl_ids.end() - 1);  // strip START/END
  } else {
    nl_ids = greedy_decode(enc.code_ids, ckpt.params, config.max_len, config.mask_unk)
                 .token_ids;
  }
  if (nl_ids.empty()) throw EmptyChangeError("no tokens to plot (empty description)");

  const AttentionMap map =
      attention_map(enc.code_ids, nl_ids, ckpt.params, nl_vocab, code_vocab);
  write_heatmap_tsv(map, config.out);
  std::printf("wrote %zux%zu attention heatmap for %s -> %s\n", map.nl_tokens.size(),
              map.code_tokens.size(),
              examples[static_cast<std::size_t>(index)].commit_id.c_str(),
              config.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffscribe: generate natural-language descriptions of code changes"};
  app.require_subcommand(1);

  CommonFlags extract_flags, build_flags, train_flags, generate_flags, eval_flags,
      heatmap_flags;

  auto* extract = app.add_subcommand("extract", "dump a git repository into a commit store");
  std::string repo;
  extract->add_option("--repo", repo, "path to a local git clone")->required();
  extract_flags.attach(extract);

  auto* build = app.add_subcommand("build", "build dataset splits from a commit store");
  std::optional<std::string> build_commits;
  build->add_option("--commits", build_commits, "commit store directory");
  build_flags.attach(build);

  auto* train = app.add_subcommand("train", "train a model on a built dataset");
  std::optional<std::string> train_data, train_log;
  std::optional<int> train_epochs;
  train->add_option("--data", train_data, "dataset directory");
  train->add_option("--max-epochs", train_epochs, "training epoch budget");
  train->add_option("--log", train_log, "epoch log path (default <checkpoint>.log.jsonl)");
  train_flags.attach(train);

  auto* generate = app.add_subcommand("generate", "decode descriptions for a split");
  std::optional<std::string> generate_data;
  std::string generate_split = "test";
  bool generate_greedy = false;
  generate->add_option("--data", generate_data, "dataset directory");
  generate->add_option("--split", generate_split, "train|valid|test (default test)");
  generate->add_flag("--greedy", generate_greedy, "argmax decoding instead of beam");
  generate_flags.attach(generate);

  auto* eval_cmd = app.add_subcommand("eval", "score generated descriptions");
  std::string eval_pairs;
  eval_cmd->add_option("--pairs", eval_pairs, "generate output (JSONL)")->required();
  eval_flags.attach(eval_cmd);

  auto* heatmap = app.add_subcommand("heatmap", "export attention weights as TSV");
  std::optional<std::string> heatmap_data;
  std::string heatmap_split = "test";
  int heatmap_index = 0;
  bool heatmap_reference = false;
  heatmap->add_option("--data", heatmap_data, "dataset directory");
  heatmap->add_option("--split", heatmap_split, "train|valid|test (default test)");
  heatmap->add_option("--index", heatmap_index, "example index within the split");
  heatmap->add_flag("--reference", heatmap_reference,
                    "teacher-force the reference instead of the greedy decode");
  heatmap_flags.attach(heatmap);

  CLI11_PARSE(app, argc, argv);

  try {
    if (extract->parsed()) return cmd_extract(extract_flags, repo);
    if (build->parsed()) return cmd_build(build_flags, build_commits);
    if (train->parsed()) return cmd_train(train_flags, train_data, train_epochs, train_log);
    if (generate->parsed())
      return cmd_generate(generate_flags, generate_data, generate_split, generate_greedy);
    if (eval_cmd->parsed()) return cmd_eval(eval_flags, eval_pairs);
    if (heatmap->parsed())
      return cmd_heatmap(heatmap_flags, heatmap_data, heatmap_split, heatmap_index,
                         heatmap_reference);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
