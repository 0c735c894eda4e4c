#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

#include "diffscribe/diff.hpp"
#include "diffscribe/eval.hpp"
#include "diffscribe/tokenize.hpp"

using namespace diffscribe;

static void ParseUnifiedDiff(benchmark::State& state) {
  // counts per side: context + one-sided lines
  const int lines = 30;  // 10 ctx, 10 added, 10 removed per hunk: old=20, new=20
  std::ostringstream out;
  for (int f = 0; f < 4; ++f) {
    out << "diff --git a/f" << f << " b/f" << f << "\n--- a/f" << f << "\n+++ b/f" << f
        << "\n";
    for (int h = 0; h < 3; ++h) {
      out << "@@ -1,20 +1,20 @@\n";
      for (int l = 0; l < lines; ++l) {
        const char prefix = l % 3 == 0 ? ' ' : (l % 3 == 1 ? '+' : '-');
        out << prefix << "x" << l << " = " << l << "\n";
      }
    }
  }
  const std::string diff = out.str();
  for (auto _ : state) {
    auto files = parse_unified_diff(diff);
    benchmark::DoNotOptimize(files.data());
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(diff.size()));
}
BENCHMARK(ParseUnifiedDiff);

static void LexCodeLine(benchmark::State& state) {
  const std::string line =
      "if (config->max_size >= 128 && name != \"temp\") { counts[key] += offset * 3; }";
  for (auto _ : state) {
    auto tokens = lex_code_line(line);
    benchmark::DoNotOptimize(tokens.data());
  }
}
BENCHMARK(LexCodeLine);

static void TokenizeNl(benchmark::State& state) {
  const std::string msg = "Don't crash when the cache (per-project) is missing.";
  for (auto _ : state) {
    auto tokens = tokenize_nl(msg);
    benchmark::DoNotOptimize(tokens.data());
  }
}
BENCHMARK(TokenizeNl);

static void SentenceMetrics(benchmark::State& state) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> words{"fix", "the", "build", "error", "in",
                                       "parser", "and", "add", "a", "test"};
  std::vector<std::string> cand, ref;
  for (int i = 0; i < 15; ++i) cand.push_back(words[rng() % words.size()]);
  for (int i = 0; i < 15; ++i) ref.push_back(words[rng() % words.size()]);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bleu4_sentence(cand, ref));
    benchmark::DoNotOptimize(meteor_exact(cand, ref));
  }
}
BENCHMARK(SentenceMetrics);

BENCHMARK_MAIN();
