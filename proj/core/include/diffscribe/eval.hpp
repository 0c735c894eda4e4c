#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "diffscribe/errors.hpp"
#include "diffscribe/tokenize.hpp"

namespace diffscribe {

// Sentence-level BLEU-4: geometric mean of modified n-gram precisions for
// n=1..4 with add-one smoothing on zero counts for n >= 2, times the brevity
// penalty exp(1 - r/c) when the candidate is shorter than the reference.
// Zero unigram overlap (or an empty candidate) scores 0.
template <typename T>
double bleu4_sentence(const std::vector<T>& candidate, const std::vector<T>& reference) {
  if (candidate.empty()) return 0.0;
  const auto c = static_cast<std::int64_t>(candidate.size());
  const auto r = static_cast<std::int64_t>(reference.size());

  double log_sum = 0.0;
  for (int n = 1; n <= 4; ++n) {
    std::map<std::vector<T>, std::int64_t> ref_counts;
    for (std::int64_t i = 0; i + n <= r; ++i)
      ++ref_counts[std::vector<T>(reference.begin() + i, reference.begin() + i + n)];

    std::map<std::vector<T>, std::int64_t> cand_counts;
    for (std::int64_t i = 0; i + n <= c; ++i)
      ++cand_counts[std::vector<T>(candidate.begin() + i, candidate.begin() + i + n)];

    std::int64_t matched = 0;
    for (const auto& [gram, count] : cand_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    const std::int64_t total = std::max<std::int64_t>(0, c - n + 1);

    if (n == 1) {
      if (matched == 0) return 0.0;
      log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
    } else if (matched == 0) {
      log_sum += std::log(1.0 / static_cast<double>(total + 1));
    } else {
      log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
    }
  }

  double score = std::exp(log_sum / 4.0);
  if (c < r) score *= std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return score;
}

namespace detail {

struct MeteorAlignment {
  int matches = 0;
  int chunks = 0;
};

// Exact maximum-match, minimum-chunk alignment over exact-surface unigrams.
// Branch-and-bound over candidate positions: every maximum matching is
// reachable; run-extending assignments are explored first so low-chunk
// alignments bound the search early.
class ChunkSearch {
public:
  ChunkSearch(std::vector<int> cand, std::vector<int> ref, std::vector<int> needed)
      : cand_(std::move(cand)), ref_(std::move(ref)), needed_(std::move(needed)),
        avail_(needed_.size(), 0), used_(ref_.size(), false) {
    for (int t : cand_) ++avail_[static_cast<std::size_t>(t)];
    total_needed_ = 0;
    for (int k : needed_) total_needed_ += k;
  }

  MeteorAlignment run() {
    best_chunks_ = total_needed_ + 1;
    recurse(0, -2, -2, 0, 0);
    return {total_needed_, best_chunks_};
  }

private:
  void recurse(std::size_t ci, int last_cand, int last_ref, int chunks, int matched) {
    if (matched == total_needed_) {
      best_chunks_ = std::min(best_chunks_, chunks);
      return;
    }
    if (ci >= cand_.size() || chunks >= best_chunks_) return;

    const int t = cand_[ci];
    auto& avail = avail_[static_cast<std::size_t>(t)];
    auto& needed = needed_[static_cast<std::size_t>(t)];
    --avail;

    if (needed > 0) {
      const bool adjacent = static_cast<int>(ci) == last_cand + 1;
      // Run extension first: same chunk, no cost.
      const int run_j = last_ref + 1;
      if (adjacent && run_j >= 0 && run_j < static_cast<int>(ref_.size()) &&
          !used_[static_cast<std::size_t>(run_j)] &&
          ref_[static_cast<std::size_t>(run_j)] == t) {
        used_[static_cast<std::size_t>(run_j)] = true;
        --needed;
        recurse(ci + 1, static_cast<int>(ci), run_j, chunks, matched + 1);
        ++needed;
        used_[static_cast<std::size_t>(run_j)] = false;
      }
      for (int j = 0; j < static_cast<int>(ref_.size()); ++j) {
        if (used_[static_cast<std::size_t>(j)] || ref_[static_cast<std::size_t>(j)] != t)
          continue;
        if (adjacent && j == run_j) continue;  // already tried as extension
        used_[static_cast<std::size_t>(j)] = true;
        --needed;
        recurse(ci + 1, static_cast<int>(ci), j, chunks + 1, matched + 1);
        ++needed;
        used_[static_cast<std::size_t>(j)] = false;
      }
    }
    // Skipping is allowed only while the per-type quota stays reachable.
    if (avail >= needed) recurse(ci + 1, -2, -2, chunks, matched);
    ++avail;
  }

  std::vector<int> cand_, ref_, needed_, avail_;
  std::vector<bool> used_;
  int total_needed_ = 0;
  int best_chunks_ = 0;
};

template <typename T>
MeteorAlignment meteor_align(const std::vector<T>& candidate,
                             const std::vector<T>& reference) {
  std::map<T, int> type_ids;
  auto type_of = [&](const T& tok) {
    auto [it, inserted] = type_ids.emplace(tok, static_cast<int>(type_ids.size()));
    return it->second;
  };
  std::vector<int> cand, ref;
  cand.reserve(candidate.size());
  ref.reserve(reference.size());
  for (const T& tok : candidate) cand.push_back(type_of(tok));
  for (const T& tok : reference) ref.push_back(type_of(tok));

  std::vector<int> cand_count(type_ids.size(), 0), ref_count(type_ids.size(), 0);
  for (int t : cand) ++cand_count[static_cast<std::size_t>(t)];
  for (int t : ref) ++ref_count[static_cast<std::size_t>(t)];
  std::vector<int> needed(type_ids.size(), 0);
  int m = 0;
  for (std::size_t t = 0; t < type_ids.size(); ++t) {
    needed[t] = std::min(cand_count[t], ref_count[t]);
    m += needed[t];
  }
  if (m == 0) return {0, 0};
  return ChunkSearch(std::move(cand), std::move(ref), std::move(needed)).run();
}

}  // namespace detail

// Exact-match METEOR: unigram alignment maximizing matches then minimizing
// chunks; Fmean = 10PR/(R+9P), Penalty = 0.5*(chunks/m)^3.
template <typename T>
double meteor_exact(const std::vector<T>& candidate, const std::vector<T>& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const detail::MeteorAlignment a = detail::meteor_align(candidate, reference);
  if (a.matches == 0) return 0.0;
  const double m = a.matches;
  const double precision = m / static_cast<double>(candidate.size());
  const double recall = m / static_cast<double>(reference.size());
  const double fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
  const double chunk_ratio = static_cast<double>(a.chunks) / m;
  const double penalty = 0.5 * chunk_ratio * chunk_ratio * chunk_ratio;
  return fmean * (1.0 - penalty);
}

// Fraction of positions where predicted and target ids agree. Lengths must
// already be mask-aligned.
double token_accuracy(const std::vector<TokenId>& predicted,
                      const std::vector<TokenId>& target);

struct ScoredPair {
  std::vector<std::string> candidate;
  std::vector<std::string> reference;
  double bleu4 = 0.0;
  double meteor = 0.0;
};

struct CorpusScore {
  double mean_bleu4 = 0.0;
  double mean_meteor = 0.0;
  std::size_t count = 0;
};

// Scores every pair in place and returns the arithmetic means. Throws
// EmptySetError on an empty input.
CorpusScore corpus_evaluate(std::vector<ScoredPair>& pairs);

// JSON-lines report: one {candidate, reference, bleu4, meteor} object per
// pair, then a {count, mean_bleu4, mean_meteor} summary object.
void write_eval_report(const std::vector<ScoredPair>& pairs, const CorpusScore& score,
                       const std::string& path);

}  // namespace diffscribe
