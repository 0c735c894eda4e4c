#pragma once

#include <string>
#include <vector>

#include "diffscribe/model.hpp"
#include "diffscribe/tokenize.hpp"

namespace diffscribe {

// Beam-search partial output. token_ids excludes START; a finished hypothesis
// ends with END. logprob is the raw sum of per-step log probabilities (no
// length normalization).
struct Hypothesis {
  std::vector<TokenId> token_ids;
  double logprob = 0.0;
  DecoderState<float> state;
  bool finished = false;
};

struct DecodeOptions {
  int beam_width = 10;
  int max_len = 20;      // generated tokens, END excluded
  bool mask_unk = false; // forces UNK's logit to -inf
};

// Standard beam search from START with zero state. Each step expands every
// live hypothesis over the full vocabulary and keeps the beam_width best by
// summed logprob, ties broken by lexicographically smaller token ids.
// Hypotheses emitting END move to a completed pool; the search stops when the
// pool holds beam_width entries or the live length reaches max_len, at which
// point unfinished hypotheses are ranked as-is alongside finished ones.
// Returns the ranked pool, best first.
std::vector<Hypothesis> beam_search(const std::vector<TokenId>& code_ids,
                                    const ParamsF& params, const DecodeOptions& options);

struct GreedyResult {
  std::vector<TokenId> token_ids;  // content tokens, END stripped
  double logprob = 0.0;            // includes END's log probability when finished
  bool finished = false;
};

// Argmax decoding until END or max_len tokens. Optionally records the
// attention row used for each emitted token.
GreedyResult greedy_decode(const std::vector<TokenId>& code_ids, const ParamsF& params,
                           int max_len = 20, bool mask_unk = false,
                           std::vector<Vec<float>>* alphas_out = nullptr);

// Teacher-forces nl_ids (content tokens, no START/END) and returns one
// attention row per token: row i holds the weights used when producing
// nl_ids[i]. Columns follow code_ids order.
Mat<float> attention_weights(const std::vector<TokenId>& code_ids,
                             const std::vector<TokenId>& nl_ids, const ParamsF& params);

struct AttentionMap {
  std::vector<std::string> nl_tokens;    // row labels
  std::vector<std::string> code_tokens;  // column labels
  Mat<float> weights;                    // |nl_tokens| x |code_tokens|
};

AttentionMap attention_map(const std::vector<TokenId>& code_ids,
                           const std::vector<TokenId>& nl_ids, const ParamsF& params,
                           const Vocabulary& nl_vocab, const Vocabulary& code_vocab);

// Tab-separated export: header row of code tokens, leading column of NL
// tokens, weights with 6 decimal places.
void write_heatmap_tsv(const AttentionMap& map, const std::string& path);

}  // namespace diffscribe
