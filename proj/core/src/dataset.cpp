#include "diffscribe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "diffscribe/errors.hpp"

namespace diffscribe {
namespace {

std::string first_line(const std::string& message) {
  auto nl = message.find('\n');
  return nl == std::string::npos ? message : message.substr(0, nl);
}

std::string lowercased(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool admits(DatasetVariant variant, const CommitClass& cls) {
  switch (variant) {
    case DatasetVariant::Full: return true;
    case DatasetVariant::Atomic: return cls.atomic;
    case DatasetVariant::UniActionAdd:
      return cls.atomic && cls.kind == ChangeKind::AddOnly;
    case DatasetVariant::UniActionRemove:
      return cls.atomic && cls.kind == ChangeKind::RemoveOnly;
  }
  return false;
}

}  // namespace

double BuildStats::atomic_fraction() const {
  const std::int64_t parseable = commits_seen - skipped_malformed - skipped_binary;
  return parseable > 0 ? static_cast<double>(atomic_commits) / parseable : 0.0;
}

std::vector<Example> build_dataset(const std::vector<RawCommit>& commits,
                                   DatasetVariant variant, const TokenizerConfig& config,
                                   BuildStats* stats_out) {
  std::vector<const RawCommit*> ordered;
  ordered.reserve(commits.size());
  for (const RawCommit& c : commits) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(), [](const RawCommit* a, const RawCommit* b) {
    if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
    return a->id < b->id;
  });

  BuildStats stats;
  std::vector<Example> examples;
  for (const RawCommit* commit : ordered) {
    ++stats.commits_seen;

    ParsedDiff parsed;
    try {
      parsed = parse_diff(commit->diff_text);
    } catch (const MalformedDiffError&) {
      ++stats.skipped_malformed;
      continue;
    }
    if (parsed.binary_files > 0) {
      ++stats.skipped_binary;
      continue;
    }

    const CommitClass cls = classify_commit(parsed.files);
    if (cls.atomic) ++stats.atomic_commits;
    if (!admits(variant, cls)) {
      ++stats.skipped_variant;
      continue;
    }

    std::vector<std::string> change_lines;
    try {
      change_lines = extract_change_sequence(parsed.files, variant);
    } catch (const EmptyChangeError&) {
      ++stats.skipped_empty_change;
      continue;
    }

    Example ex;
    ex.commit_id = commit->id;
    for (const std::string& piece : change_lines) {
      if (piece == kAddMarker || piece == kRemoveMarker || piece == kNewFileToken) {
        ex.code_tokens.push_back(piece);
      } else {
        auto lexed = lex_code_line(piece);
        ex.code_tokens.insert(ex.code_tokens.end(), lexed.begin(), lexed.end());
      }
      if (ex.code_tokens.size() > kMaxSequenceTokens) break;  // already over the cap
    }
    if (ex.code_tokens.size() > kMaxSequenceTokens) {
      ++stats.skipped_code_too_long;
      continue;
    }

    std::string msg = first_line(commit->message);
    if (config.lowercase_nl) msg = lowercased(msg);
    ex.nl_tokens = tokenize_nl(msg);
    if (ex.nl_tokens.empty()) {
      ++stats.skipped_empty_message;
      continue;
    }
    if (ex.nl_tokens.size() > kMaxSequenceTokens) {
      ++stats.skipped_nl_too_long;
      continue;
    }

    ++stats.kept;
    examples.push_back(std::move(ex));
  }

  if (stats_out) *stats_out = stats;
  return examples;
}

DatasetSplits split_dataset(const std::vector<Example>& examples,
                            const std::array<double, 3>& ratios, std::uint64_t seed) {
  for (double r : ratios)
    if (r <= 0.0) throw TooFewExamplesError("split ratios must be positive");
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw TooFewExamplesError("split ratios must sum to 1");

  const std::size_t n = examples.size();
  std::size_t n_valid = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios[1])));
  std::size_t n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios[2])));
  if (n < n_valid + n_test + 1)
    throw TooFewExamplesError("need at least " + std::to_string(n_valid + n_test + 1) +
                              " examples, have " + std::to_string(n));
  const std::size_t n_train = n - n_valid - n_test;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  DatasetSplits splits;
  for (std::size_t i = 0; i < n; ++i) {
    const Example& ex = examples[order[i]];
    if (i < n_train)
      splits.train.push_back(ex);
    else if (i < n_train + n_valid)
      splits.valid.push_back(ex);
    else
      splits.test.push_back(ex);
  }
  return splits;
}

void write_examples_jsonl(const std::vector<Example>& examples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset file: " + path);
  for (const Example& ex : examples) {
    nlohmann::json obj;
    obj["commit_id"] = ex.commit_id;
    obj["code_tokens"] = ex.code_tokens;
    obj["nl_tokens"] = ex.nl_tokens;
    out << obj.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<Example> read_examples_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read dataset file: " + path);
  std::vector<Example> examples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    Example ex;
    ex.commit_id = obj.at("commit_id").get<std::string>();
    ex.code_tokens = obj.at("code_tokens").get<std::vector<std::string>>();
    ex.nl_tokens = obj.at("nl_tokens").get<std::vector<std::string>>();
    examples.push_back(std::move(ex));
  }
  return examples;
}

}  // namespace diffscribe
