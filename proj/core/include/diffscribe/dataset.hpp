#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "diffscribe/commits.hpp"
#include "diffscribe/diff.hpp"
#include "diffscribe/tokenize.hpp"

namespace diffscribe {

// One training pair: lexed change tokens and the tokenized first message line.
struct Example {
  std::string commit_id;
  std::vector<std::string> code_tokens;
  std::vector<std::string> nl_tokens;

  bool operator==(const Example&) const = default;
};

inline constexpr std::size_t kMaxSequenceTokens = 100;

// Commits can drop out of a dataset for exactly one of these reasons.
struct BuildStats {
  std::int64_t commits_seen = 0;
  std::int64_t kept = 0;
  std::int64_t skipped_malformed = 0;
  std::int64_t skipped_binary = 0;
  std::int64_t skipped_variant = 0;      // filtered by atomic / uni-action rules
  std::int64_t skipped_empty_change = 0;
  std::int64_t skipped_empty_message = 0;
  std::int64_t skipped_code_too_long = 0;
  std::int64_t skipped_nl_too_long = 0;
  std::int64_t atomic_commits = 0;       // of the parseable ones

  double atomic_fraction() const;
};

// Builds the (code, message) pairs for one variant. Deterministic: commits are
// processed in (timestamp, id) order and every stage is a pure function.
std::vector<Example> build_dataset(const std::vector<RawCommit>& commits,
                                   DatasetVariant variant, const TokenizerConfig& config,
                                   BuildStats* stats = nullptr);

struct DatasetSplits {
  std::vector<Example> train;
  std::vector<Example> valid;
  std::vector<Example> test;
};

// Seeded-shuffle partition. Valid and test get at least one example each
// (rounded shares otherwise); throws TooFewExamplesError when any side would
// come up empty.
DatasetSplits split_dataset(const std::vector<Example>& examples,
                            const std::array<double, 3>& ratios, std::uint64_t seed);

// JSON-lines persistence: {"commit_id":..., "code_tokens":[...], "nl_tokens":[...]}.
void write_examples_jsonl(const std::vector<Example>& examples, const std::string& path);
std::vector<Example> read_examples_jsonl(const std::string& path);

}  // namespace diffscribe
