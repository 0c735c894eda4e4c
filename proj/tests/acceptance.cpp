// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 1-5 drive the library directly; 6-8 drive the CLI binary
// against the bundled fixture repository.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "decode_oracle.hpp"
#include "diffscribe/checkpoint.hpp"
#include "diffscribe/dataset.hpp"
#include "diffscribe/decode.hpp"
#include "diffscribe/eval.hpp"
#include "diffscribe/model.hpp"
#include "diffscribe/tokenize.hpp"
#include "diffscribe/train.hpp"

namespace fs = std::filesystem;
using namespace diffscribe;
using diffscribe::testing::oracle_decode;

namespace {

int failures = 0;
std::vector<std::string> notes;

void report(int index, const char* name, bool pass, const std::string& detail) {
  std::printf("%s  %d. %s (%s)\n", pass ? "PASS" : "FAIL", index, name, detail.c_str());
  if (!pass) ++failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("diffscribe_acceptance_" +
                                              std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& cmd) {
  const std::string full = cmd + " >> " + (work_dir() / "cli.log").string() + " 2>&1";
  return std::system(full.c_str());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness: d_hidden=8, d_embed=8, |V_nl|=20, |V_code|=15,
//    source length 4, target length 5, 64-bit, central differences eps=1e-4,
//    max relative error <= 1e-4, under a minute.
void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelDims dims{20, 15, 8, 8};
  std::mt19937_64 rng(2024);
  ParamsD params = init_params<double>(dims, 2024);

  EncodedExample ex;
  for (int i = 0; i < 4; ++i)
    ex.code_ids.push_back(static_cast<TokenId>(rng() % dims.code_vocab));
  ex.nl_ids.push_back(SpecialIds::kStart);
  for (int i = 0; i < 4; ++i)
    ex.nl_ids.push_back(static_cast<TokenId>(rng() % dims.nl_vocab));
  ex.nl_ids.push_back(SpecialIds::kEnd);  // 5 targets including END

  ForwardTrace<double> trace;
  forward_loss<double>(ex, params, {}, &trace);
  const ParamsD analytic = backward(trace, params);

  const double epsilon = 1e-4;
  double worst = 0.0;
  auto check = [&](auto& pm, const auto& gm) {
    for (Eigen::Index r = 0; r < pm.rows(); ++r)
      for (Eigen::Index c = 0; c < pm.cols(); ++c) {
        const double saved = pm(r, c);
        pm(r, c) = saved + epsilon;
        const double up = forward_loss<double>(ex, params, {});
        pm(r, c) = saved - epsilon;
        const double down = forward_loss<double>(ex, params, {});
        pm(r, c) = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double a = gm(r, c);
        worst = std::max(worst, std::abs(a - numeric) /
                                    std::max({std::abs(a), std::abs(numeric), 1e-4}));
      }
  };
  check(params.nl_embed, analytic.nl_embed);
  check(params.code_embed, analytic.code_embed);
  check(params.lstm_wx, analytic.lstm_wx);
  check(params.lstm_wh, analytic.lstm_wh);
  check(params.lstm_bias, analytic.lstm_bias);
  check(params.out_proj, analytic.out_proj);
  check(params.comb_hidden, analytic.comb_hidden);
  check(params.comb_attn, analytic.comb_attn);

  const double elapsed = seconds_since(t0);
  char detail[128];
  std::snprintf(detail, sizeof(detail), "max rel err %.2e, %.1fs", worst, elapsed);
  report(1, "gradient correctness vs central finite differences",
         worst <= 1e-4 && elapsed < 60.0, detail);
}

// ---------------------------------------------------------------------------
// 2. Attention invariants over 1,000 random decoder steps.
void criterion_attention() {
  std::mt19937_64 rng(7);
  double worst_sum = 0.0;
  bool in_range = true;
  for (int iter = 0; iter < 1000; ++iter) {
    const int d_hidden = 1 + static_cast<int>(rng() % 16);
    const int d_embed = 1 + static_cast<int>(rng() % 16);
    const int nl_vocab = 6 + static_cast<int>(rng() % 40);
    const int code_vocab = 6 + static_cast<int>(rng() % 40);
    const int k = 1 + static_cast<int>(rng() % 40);

    ParamsF params = init_params<float>({nl_vocab, code_vocab, d_embed, d_hidden}, rng());
    visit_params(params, [&](const char*, auto& m) { m *= 25.0f; });  // sharpen scores

    std::vector<TokenId> code_ids;
    for (int j = 0; j < k; ++j)
      code_ids.push_back(static_cast<TokenId>(rng() % code_vocab));
    const Mat<float> ctx = encode_source(code_ids, params);

    DecoderState<float> state = initial_state<float>(d_hidden);
    for (int j = 0; j < d_hidden; ++j) {
      state.h[j] = static_cast<float>(uniform01(rng) * 8 - 4);
      state.c[j] = static_cast<float>(uniform01(rng) * 8 - 4);
    }
    const auto out = decoder_step<float>(static_cast<TokenId>(rng() % nl_vocab), state,
                                         ctx, params, {});
    worst_sum = std::max(worst_sum, std::abs(out.alpha.template cast<double>().sum() - 1.0));
    if (out.alpha.minCoeff() < 0.0f || out.alpha.maxCoeff() > 1.0f) in_range = false;
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail), "worst |sum-1| = %.2e over 1000 steps", worst_sum);
  report(2, "attention rows normalized and in [0,1]", worst_sum <= 1e-6 && in_range, detail);
}

// ---------------------------------------------------------------------------
// 3. Overfit sanity on the bundled 32-pair corpus.
void criterion_overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Example> examples =
      read_examples_jsonl(std::string(DIFFSCRIBE_FIXTURES) + "/synthetic_corpus.jsonl");

  std::vector<std::vector<std::string>> nl_seqs, code_seqs;
  for (const Example& ex : examples) {
    nl_seqs.push_back(ex.nl_tokens);
    code_seqs.push_back(ex.code_tokens);
  }
  const Vocabulary nl_vocab = Vocabulary::build(nl_seqs, 3);
  const Vocabulary code_vocab = Vocabulary::build(code_seqs, 2);
  std::vector<EncodedExample> train_set;
  for (const Example& ex : examples) {
    EncodedExample enc;
    enc.commit_id = ex.commit_id;
    enc.code_ids = code_vocab.encode(ex.code_tokens, false);
    enc.nl_ids = nl_vocab.encode(ex.nl_tokens, true);
    train_set.push_back(std::move(enc));
  }

  TrainConfig config;  // defaults, d_hidden lowered per the criterion
  config.hyper.d_hidden = 64;
  config.hyper.max_epochs = 200;
  config.hyper.seed = 1;
  config.patience = 200;  // overfit run: never stop early

  const FitResult result = fit(train_set, train_set, static_cast<int>(nl_vocab.size()),
                               static_cast<int>(code_vocab.size()), config);

  const ValidationResult val = validate(train_set, result.best_params);
  int exact = 0;
  for (const EncodedExample& ex : train_set) {
    const GreedyResult decoded = greedy_decode(ex.code_ids, result.best_params, 20);
    const std::vector<TokenId> reference(ex.nl_ids.begin() + 1, ex.nl_ids.end() - 1);
    if (decoded.token_ids == reference) ++exact;
  }
  const double exact_frac = static_cast<double>(exact) / static_cast<double>(train_set.size());
  const double elapsed = seconds_since(t0);

  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "val acc %.4f, exact decodes %d/32, %zu epochs, %.1fs", val.token_accuracy,
                exact, result.history.size(), elapsed);
  report(3, "overfit sanity on the 32-pair corpus",
         val.token_accuracy >= 0.99 && exact_frac >= 0.90 && elapsed < 600.0, detail);
}

// ---------------------------------------------------------------------------
// 4. Beam oracle on a trained toy model (|V_nl|=5, max_len=3).
void criterion_beam() {
  const ModelDims dims{5, 6, 8, 8};
  // Train a toy mapping: code token j prefers NL token (j % 2) + 3.
  std::vector<EncodedExample> toy;
  std::mt19937_64 data_rng(3);
  for (int i = 0; i < 24; ++i) {
    EncodedExample ex;
    const TokenId code = static_cast<TokenId>(data_rng() % dims.code_vocab);
    ex.code_ids = {code};
    ex.nl_ids = {SpecialIds::kStart, static_cast<TokenId>(3 + (code % 2)),
                 static_cast<TokenId>(3 + ((code + 1) % 2)), SpecialIds::kEnd};
    toy.push_back(std::move(ex));
  }
  TrainConfig config;
  config.hyper.d_hidden = 8;
  config.hyper.d_embed = 8;
  config.hyper.dropout_p = 0.1;
  ParamsF params = init_params<float>(dims, 5);
  AdamState<float> opt = AdamState<float>::zeros(dims);
  std::mt19937_64 rng(5);
  for (int epoch = 0; epoch < 30; ++epoch) train_epoch(toy, params, opt, config, rng);

  // (a) beam 125 must equal exhaustive enumeration
  bool oracle_ok = true;
  std::string first_mismatch;
  for (TokenId code = 0; code < dims.code_vocab && oracle_ok; ++code) {
    const std::vector<TokenId> input{code};
    const auto oracle = oracle_decode(input, params, 3);
    const auto ranked = beam_search(input, params, {125, 3, false});
    if (ranked.empty() || ranked.front().token_ids != oracle.front().tokens ||
        std::abs(ranked.front().logprob - oracle.front().logprob) > 1e-9) {
      oracle_ok = false;
      first_mismatch = "input " + std::to_string(code);
    }
  }

  // (b) beam-10 top-1 never scores below greedy on 100 random inputs
  int dominated = 0;
  std::mt19937_64 input_rng(11);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<TokenId> code;
    for (int j = 0; j < 1 + static_cast<int>(input_rng() % 4); ++j)
      code.push_back(static_cast<TokenId>(input_rng() % dims.code_vocab));
    const GreedyResult greedy = greedy_decode(code, params, 20);
    const auto ranked = beam_search(code, params, {10, 20, false});
    if (!ranked.empty() && ranked.front().logprob >= greedy.logprob - 1e-9) ++dominated;
  }

  char detail[160];
  std::snprintf(detail, sizeof(detail), "oracle match %s, beam>=greedy on %d/100",
                oracle_ok ? "yes" : first_mismatch.c_str(), dominated);
  report(4, "beam search matches brute force and dominates greedy",
         oracle_ok && dominated == 100, detail);
}

// ---------------------------------------------------------------------------
// 5. Metric oracles against hand-computed fixtures.
void criterion_metrics() {
  using V = std::vector<std::string>;
  struct Fixture {
    V cand, ref;
    double expected;
  };
  const std::vector<Fixture> bleu{
      {{"a", "b", "c", "d"}, {"a", "b", "c", "e"}, std::pow(0.125, 0.25)},
      {{"a", "b", "c", "d"}, {"a", "b", "c", "d"}, 1.0},
      {{"x", "y"}, {"a", "b"}, 0.0},
      {{"a", "b", "c", "d"}, {"a", "b", "c", "d", "e", "f", "g", "h"}, std::exp(-1.0)},
      {{"the", "the", "the", "the"},
       {"the", "cat", "the", "dog"},
       std::pow(0.5 * 0.25 * (1.0 / 3.0) * 0.5, 0.25)},
      {{}, {"a"}, 0.0},
  };
  const std::vector<Fixture> meteor{
      {{"a", "x", "b"}, {"a", "b"}, 10.0 * (2.0 / 3.0) / 7.0 * 0.5},
      {{"a"}, {"a"}, 0.5},
      {{"a", "b", "c", "d"}, {"a", "b", "c", "d"}, 1.0 - 0.5 / 64.0},
      {{"p", "q"}, {"r", "s"}, 0.0},
      {{"a", "b"}, {"b", "a"}, 0.5},
      {{"a", "a"}, {"a"}, (10.0 * 0.5 / 5.5) * 0.5},
  };

  double worst = 0.0;
  for (const Fixture& f : bleu)
    worst = std::max(worst, std::abs(bleu4_sentence(f.cand, f.ref) - f.expected));
  for (const Fixture& f : meteor)
    worst = std::max(worst, std::abs(meteor_exact(f.cand, f.ref) - f.expected));

  char detail[96];
  std::snprintf(detail, sizeof(detail), "%zu fixtures, worst abs err %.2e",
                bleu.size() + meteor.size(), worst);
  report(5, "BLEU-4 and METEOR match hand-computed fixtures", worst <= 1e-6, detail);
}

// ---------------------------------------------------------------------------
// 6. Diff pipeline vs the fixture manifest.
void criterion_pipeline() {
  const fs::path dir = work_dir();
  const std::string repo = (dir / "repo").string();
  const std::string store = (dir / "commits").string();
  const std::string fixtures = DIFFSCRIBE_FIXTURES;
  const std::string bin = DIFFSCRIBE_BIN;

  bool ok = true;
  std::string why = "ok";
  auto fail = [&](const std::string& reason) {
    if (ok) why = reason;
    ok = false;
  };

  if (run("sh " + fixtures + "/make_fixture_repo.sh " + repo) != 0)
    fail("fixture repo script failed");
  if (ok && run(bin + " extract --repo " + repo + " --out " + store) != 0)
    fail("extract failed");

  const nlohmann::json manifest =
      nlohmann::json::parse(read_file(fixtures + "/fixture_manifest.json"));

  if (ok) {
    std::ifstream meta(fs::path(store) / "metadata.tsv");
    int rows = 0;
    std::string line;
    while (std::getline(meta, line))
      if (!line.empty()) ++rows;
    if (rows != manifest.at("commits_extracted").get<int>())
      fail("extracted " + std::to_string(rows) + " commits");
  }

  const std::string config_path = (dir / "build_config.json").string();
  {
    std::ofstream cfg(config_path);
    cfg << R"({"nl_min_count": 1, "code_min_count": 1})" << "\n";
  }

  for (const auto& [variant, expected] : manifest.at("variants").items()) {
    if (!ok) break;
    const std::string data = (dir / ("data_" + variant)).string();
    if (run(bin + " build --commits " + store + " --out " + data + " --variant " + variant +
            " --config " + config_path + " --seed 13") != 0) {
      fail("build " + variant + " failed");
      break;
    }
    const nlohmann::json stats = nlohmann::json::parse(read_file(fs::path(data) / "stats.json"));
    for (const char* key : {"examples", "train", "valid", "test", "skipped_binary",
                            "skipped_variant", "skipped_code_too_long"}) {
      if (stats.at(key).get<std::int64_t>() != expected.at(key).get<std::int64_t>()) {
        fail(variant + ": " + key + " = " + stats.at(key).dump() + ", manifest " +
             expected.at(key).dump());
        break;
      }
    }
    // token caps and NEW_FILE exclusion over every produced example
    for (const char* split : {"train.jsonl", "valid.jsonl", "test.jsonl"}) {
      for (const Example& ex : read_examples_jsonl((fs::path(data) / split).string())) {
        if (ex.code_tokens.size() > 100 || ex.nl_tokens.size() > 100)
          fail(variant + ": example over 100 tokens");
        if (variant != "full")
          for (const auto& tok : ex.code_tokens)
            if (tok == "NEW_FILE") fail(variant + ": NEW_FILE leaked");
      }
    }
  }
  report(6, "extract+build reproduce the fixture manifest", ok, why);
}

// ---------------------------------------------------------------------------
// 7. Reproducibility: two CLI train runs, bit-identical checkpoints and logs
//    (wall-clock excluded).
void criterion_reproducibility() {
  const fs::path dir = work_dir();
  const std::string bin = DIFFSCRIBE_BIN;
  const std::string data = (dir / "syn_data").string();

  // dataset dir from the bundled synthetic corpus (same file for each split)
  fs::create_directories(data);
  const std::vector<Example> examples =
      read_examples_jsonl(std::string(DIFFSCRIBE_FIXTURES) + "/synthetic_corpus.jsonl");
  std::vector<std::vector<std::string>> nl_seqs, code_seqs;
  for (const Example& ex : examples) {
    nl_seqs.push_back(ex.nl_tokens);
    code_seqs.push_back(ex.code_tokens);
  }
  Vocabulary::build(nl_seqs, 3).save(data + "/nl.vocab");
  Vocabulary::build(code_seqs, 2).save(data + "/code.vocab");
  write_examples_jsonl(examples, data + "/train.jsonl");
  write_examples_jsonl({examples.begin(), examples.begin() + 8}, data + "/valid.jsonl");
  write_examples_jsonl({examples.begin() + 8, examples.begin() + 16}, data + "/test.jsonl");

  const std::string config_path = (dir / "train_config.json").string();
  {
    std::ofstream cfg(config_path);
    cfg << R"({"d_hidden": 32, "d_embed": 32, "max_epochs": 3, "seed": 9,)"
        << R"( "batch_size": 8})" << "\n";
  }

  auto train_once = [&](const std::string& tag) {
    const std::string ckpt = (dir / ("repro_" + tag + ".ckpt")).string();
    const std::string log = ckpt + ".log.jsonl";
    const int rc = run(bin + " train --data " + data + " --checkpoint " + ckpt +
                       " --log " + log + " --config " + config_path);
    return std::make_tuple(rc, read_file(ckpt), read_file(log));
  };
  const auto [rc1, ckpt1, log1] = train_once("a");
  const auto [rc2, ckpt2, log2] = train_once("b");

  auto strip_wall = [](const std::string& log) {
    std::string out;
    std::istringstream in(log);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json obj = nlohmann::json::parse(line);
      obj.erase("wall_seconds");
      out += obj.dump() + "\n";
    }
    return out;
  };

  const bool ok = rc1 == 0 && rc2 == 0 && !ckpt1.empty() && ckpt1 == ckpt2 &&
                  strip_wall(log1) == strip_wall(log2);
  char detail[96];
  std::snprintf(detail, sizeof(detail), "checkpoint %zu bytes, logs %s", ckpt1.size(),
                strip_wall(log1) == strip_wall(log2) ? "identical" : "differ");
  report(7, "seeded train runs are bit-identical", ok, detail);
}

// ---------------------------------------------------------------------------
// 8. End-to-end smoke on the fixture repo, under 5 minutes.
void criterion_end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = work_dir();
  const std::string bin = DIFFSCRIBE_BIN;
  const std::string repo = (dir / "repo").string();  // built by criterion 6
  const std::string store = (dir / "e2e_commits").string();
  const std::string data = (dir / "e2e_data").string();
  const std::string ckpt = (dir / "e2e.ckpt").string();
  const std::string gen = (dir / "e2e_gen.jsonl").string();
  const std::string evl = (dir / "e2e_eval.jsonl").string();

  bool ok = true;
  std::string why = "ok";
  auto fail = [&](const std::string& reason) {
    if (ok) why = reason;
    ok = false;
  };

  const std::string config_path = (dir / "e2e_config.json").string();
  {
    std::ofstream cfg(config_path);
    cfg << R"({"nl_min_count": 1, "code_min_count": 1, "d_hidden": 64, "d_embed": 64,)"
        << R"( "batch_size": 4, "seed": 3})" << "\n";
  }

  if (!fs::exists(repo) && run("sh " + std::string(DIFFSCRIBE_FIXTURES) +
                               "/make_fixture_repo.sh " + repo) != 0)
    fail("fixture repo script failed");
  if (ok && run(bin + " extract --repo " + repo + " --out " + store) != 0)
    fail("extract failed");
  if (ok && run(bin + " build --commits " + store + " --out " + data +
                " --variant atomic --config " + config_path) != 0)
    fail("build failed");
  if (ok && run(bin + " train --data " + data + " --checkpoint " + ckpt +
                " --config " + config_path + " --max-epochs 2") != 0)
    fail("train failed");
  if (ok && run(bin + " generate --data " + data + " --checkpoint " + ckpt + " --out " +
                gen + " --beam 10 --max-len 20 --config " + config_path) != 0)
    fail("generate failed");
  if (ok && run(bin + " eval --pairs " + gen + " --out " + evl) != 0) fail("eval failed");

  if (ok) {
    // well-formed JSONL and the 20-token cap
    std::ifstream in(gen);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const nlohmann::json obj = nlohmann::json::parse(line);
      if (obj.at("candidate").size() > 20) fail("candidate over 20 tokens");
      ++rows;
    }
    if (rows == 0) fail("no generated rows");

    std::ifstream ein(evl);
    int erows = 0;
    bool summary = false;
    while (std::getline(ein, line)) {
      if (line.empty()) continue;
      const nlohmann::json obj = nlohmann::json::parse(line);
      if (obj.contains("mean_bleu4")) summary = true;
      ++erows;
    }
    if (!summary || erows != rows + 1) fail("malformed eval report");
  }

  const double elapsed = seconds_since(t0);
  char detail[96];
  std::snprintf(detail, sizeof(detail), "%s, %.1fs", why.c_str(), elapsed);
  report(8, "end-to-end extract/build/train/generate/eval", ok && elapsed < 300.0, detail);
}

}  // namespace

int main() {
  std::printf("diffscribe acceptance suite\n");
  criterion_gradients();
  criterion_attention();
  criterion_overfit();
  criterion_beam();
  criterion_metrics();
  criterion_pipeline();
  criterion_reproducibility();
  criterion_end_to_end();
  if (failures == 0) {
    std::printf("all criteria passed\n");
  } else {
    std::printf("%d criteria FAILED (cli log: %s)\n", failures,
                (work_dir() / "cli.log").string().c_str());
  }
  return failures == 0 ? 0 : 1;
}
