#include "diffscribe/decode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "diffscribe/errors.hpp"

namespace diffscribe {
namespace {

// Log softmax computed in double so beam scores stay comparable across steps.
Eigen::VectorXd log_softmax(const Vec<float>& logits, bool mask_unk) {
  Eigen::VectorXd z = logits.cast<double>();
  if (mask_unk) z[SpecialIds::kUnk] = -std::numeric_limits<double>::infinity();
  const double max_z = z.maxCoeff();
  const double log_sum = std::log((z.array() - max_z).exp().sum()) + max_z;
  return (z.array() - log_sum).matrix();
}

const DropoutMasks<float> kNoDropout{};

}  // namespace

std::vector<Hypothesis> beam_search(const std::vector<TokenId>& code_ids,
                                    const ParamsF& params, const DecodeOptions& options) {
  if (options.beam_width < 1) throw std::invalid_argument("beam_width must be >= 1");
  const Mat<float> context = encode_source(code_ids, params);
  const int d_hidden = static_cast<int>(params.comb_hidden.rows());
  const auto vocab_size = static_cast<TokenId>(params.nl_embed.rows());

  std::vector<Hypothesis> live;
  live.push_back({{}, 0.0, initial_state<float>(d_hidden), false});
  std::vector<Hypothesis> pool;

  struct Candidate {
    double logprob;
    std::vector<TokenId> seq;
    std::size_t parent;
    TokenId token;
  };

  for (int step = 0; step < options.max_len && !live.empty(); ++step) {
    std::vector<StepResult<float>> parent_steps(live.size());
    std::vector<Candidate> candidates;
    candidates.reserve(live.size() * static_cast<std::size_t>(vocab_size));
    for (std::size_t p = 0; p < live.size(); ++p) {
      const TokenId prev =
          live[p].token_ids.empty() ? SpecialIds::kStart : live[p].token_ids.back();
      parent_steps[p] =
          decoder_step<float>(prev, live[p].state, context, params, kNoDropout);
      const Eigen::VectorXd logp = log_softmax(parent_steps[p].logits, options.mask_unk);
      for (TokenId tok = 0; tok < vocab_size; ++tok) {
        if (options.mask_unk && tok == SpecialIds::kUnk) continue;
        Candidate cand;
        cand.logprob = live[p].logprob + logp[tok];
        cand.seq = live[p].token_ids;
        cand.seq.push_back(tok);
        cand.parent = p;
        cand.token = tok;
        candidates.push_back(std::move(cand));
      }
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.logprob != b.logprob) return a.logprob > b.logprob;
      return a.seq < b.seq;
    });
    if (candidates.size() > static_cast<std::size_t>(options.beam_width))
      candidates.resize(static_cast<std::size_t>(options.beam_width));

    std::vector<Hypothesis> next_live;
    for (Candidate& cand : candidates) {
      Hypothesis hyp;
      hyp.token_ids = std::move(cand.seq);
      hyp.logprob = cand.logprob;
      hyp.state = parent_steps[cand.parent].state;
      hyp.finished = cand.token == SpecialIds::kEnd;
      if (hyp.finished)
        pool.push_back(std::move(hyp));
      else
        next_live.push_back(std::move(hyp));
    }
    live = std::move(next_live);
    if (pool.size() >= static_cast<std::size_t>(options.beam_width)) {
      live.clear();
      break;
    }
  }

  // Hypotheses still live hit max_len; they are ranked as-is.
  for (Hypothesis& hyp : live) pool.push_back(std::move(hyp));
  std::sort(pool.begin(), pool.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.logprob != b.logprob) return a.logprob > b.logprob;
    return a.token_ids < b.token_ids;
  });
  return pool;
}

GreedyResult greedy_decode(const std::vector<TokenId>& code_ids, const ParamsF& params,
                           int max_len, bool mask_unk,
                           std::vector<Vec<float>>* alphas_out) {
  const Mat<float> context = encode_source(code_ids, params);
  const int d_hidden = static_cast<int>(params.comb_hidden.rows());

  GreedyResult result;
  DecoderState<float> state = initial_state<float>(d_hidden);
  TokenId prev = SpecialIds::kStart;
  for (int step = 0; step < max_len; ++step) {
    StepResult<float> out = decoder_step<float>(prev, state, context, params, kNoDropout);
    const Eigen::VectorXd logp = log_softmax(out.logits, mask_unk);
    Eigen::Index best = 0;
    logp.maxCoeff(&best);  // first maximum wins, i.e. lowest token id on ties
    const TokenId tok = static_cast<TokenId>(best);
    result.logprob += logp[best];
    if (tok == SpecialIds::kEnd) {
      result.finished = true;
      return result;
    }
    result.token_ids.push_back(tok);
    if (alphas_out) alphas_out->push_back(out.alpha);
    state = std::move(out.state);
    prev = tok;
  }
  return result;
}

Mat<float> attention_weights(const std::vector<TokenId>& code_ids,
                             const std::vector<TokenId>& nl_ids, const ParamsF& params) {
  const Mat<float> context = encode_source(code_ids, params);
  const int d_hidden = static_cast<int>(params.comb_hidden.rows());
  Mat<float> rows(static_cast<Eigen::Index>(nl_ids.size()),
                  static_cast<Eigen::Index>(code_ids.size()));

  DecoderState<float> state = initial_state<float>(d_hidden);
  TokenId prev = SpecialIds::kStart;
  for (std::size_t i = 0; i < nl_ids.size(); ++i) {
    StepResult<float> out = decoder_step<float>(prev, state, context, params, kNoDropout);
    rows.row(static_cast<Eigen::Index>(i)) = out.alpha.transpose();
    state = std::move(out.state);
    prev = nl_ids[i];
  }
  return rows;
}

AttentionMap attention_map(const std::vector<TokenId>& code_ids,
                           const std::vector<TokenId>& nl_ids, const ParamsF& params,
                           const Vocabulary& nl_vocab, const Vocabulary& code_vocab) {
  AttentionMap map;
  map.weights = attention_weights(code_ids, nl_ids, params);
  for (TokenId id : nl_ids) map.nl_tokens.push_back(nl_vocab.token_of(id));
  for (TokenId id : code_ids) map.code_tokens.push_back(code_vocab.token_of(id));
  return map;
}

void write_heatmap_tsv(const AttentionMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write heatmap: " + path);
  for (const std::string& tok : map.code_tokens) out << '\t' << tok;
  out << '\n';
  char buf[32];
  for (Eigen::Index r = 0; r < map.weights.rows(); ++r) {
    out << map.nl_tokens[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < map.weights.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.6f", static_cast<double>(map.weights(r, c)));
      out << '\t' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("heatmap write failed: " + path);
}

}  // namespace diffscribe
