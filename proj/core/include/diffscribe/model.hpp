#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "diffscribe/tokenize.hpp"

namespace diffscribe {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct HyperParams {
  int d_hidden = 256;
  int d_embed = 256;
  double dropout_p = 0.5;
  double learning_rate = 1e-3;
  double grad_clip = 5.0;
  // Examples are processed one at a time, so batch size only sets how often
  // the optimizer steps; small batches converge in fewer epochs at the same
  // cost per epoch.
  int batch_size = 4;
  int max_epochs = 50;
  std::uint64_t seed = 1;
};

struct ModelDims {
  int nl_vocab = 0;
  int code_vocab = 0;
  int d_embed = 0;
  int d_hidden = 0;

  bool operator==(const ModelDims&) const = default;
};

// All trainable state. The source side is a pure embedding table (the encoder
// reads tokens straight out of code_embed); the decoder is a single LSTM cell
// whose output mixes with the attention contribution before the softmax
// projection. Gate packing in lstm_* rows: [input, forget, cell, output].
template <typename S>
struct Params {
  Mat<S> nl_embed;     // |V_nl| x d_embed
  Mat<S> code_embed;   // |V_code| x d_hidden
  Mat<S> lstm_wx;      // 4*d_hidden x d_embed
  Mat<S> lstm_wh;      // 4*d_hidden x d_hidden
  Vec<S> lstm_bias;    // 4*d_hidden
  Mat<S> out_proj;     // |V_nl| x d_hidden
  Mat<S> comb_hidden;  // d_hidden x d_hidden
  Mat<S> comb_attn;    // d_hidden x d_hidden

  ModelDims dims() const {
    return ModelDims{static_cast<int>(nl_embed.rows()), static_cast<int>(code_embed.rows()),
                     static_cast<int>(nl_embed.cols()), static_cast<int>(code_embed.cols())};
  }
  static Params zeros(const ModelDims& d);
};

// Visits every parameter matrix in the fixed checkpoint order.
template <typename S, typename Fn>
void visit_params(Params<S>& p, Fn&& fn) {
  fn("nl_embed", p.nl_embed);
  fn("code_embed", p.code_embed);
  fn("lstm_wx", p.lstm_wx);
  fn("lstm_wh", p.lstm_wh);
  fn("lstm_bias", p.lstm_bias);
  fn("out_proj", p.out_proj);
  fn("comb_hidden", p.comb_hidden);
  fn("comb_attn", p.comb_attn);
}
template <typename S, typename Fn>
void visit_params(const Params<S>& p, Fn&& fn) {
  fn("nl_embed", p.nl_embed);
  fn("code_embed", p.code_embed);
  fn("lstm_wx", p.lstm_wx);
  fn("lstm_wh", p.lstm_wh);
  fn("lstm_bias", p.lstm_bias);
  fn("out_proj", p.out_proj);
  fn("comb_hidden", p.comb_hidden);
  fn("comb_attn", p.comb_attn);
}

using ParamsF = Params<float>;
using ParamsD = Params<double>;

// mt19937_64 output folded to [0,1) with 53-bit resolution; avoids stdlib
// distribution differences so seeds reproduce across toolchains.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform fill in [-0.08, 0.08] in checkpoint matrix order, row-major element
// order; LSTM forget-gate bias set to 1.
template <typename S>
Params<S> init_params(const ModelDims& dims, std::uint64_t seed);

// One example with ids ready for the model: code side without boundaries,
// NL side wrapped in START..END.
struct EncodedExample {
  std::string commit_id;
  std::vector<TokenId> code_ids;
  std::vector<TokenId> nl_ids;
};

// Row j = code_embed[code_ids[j]]; pure lookup, no recurrence.
template <typename S>
Mat<S> encode_source(const std::vector<TokenId>& code_ids, const Params<S>& params);

template <typename S>
struct AttentionResult {
  Vec<S> context;  // a_i, d_hidden
  Vec<S> alpha;    // k weights, sums to 1
};

// alpha = softmax over h . context_row_j (max-subtracted), a = sum alpha_j row_j.
template <typename S>
AttentionResult<S> attention(const Vec<S>& h, const Mat<S>& context_rows);

template <typename S>
struct DecoderState {
  Vec<S> h;
  Vec<S> c;
};

template <typename S>
DecoderState<S> initial_state(int d_hidden) {
  return {Vec<S>::Zero(d_hidden), Vec<S>::Zero(d_hidden)};
}

// Inverted-dropout masks, entries 0 or 1/(1-p). Inactive masks make the
// training path identical to inference.
template <typename S>
struct DropoutMasks {
  bool active = false;
  Vec<S> embed;   // d_embed, on the NL embedding
  Vec<S> input;   // d_embed, on the LSTM non-recurrent connection
  Vec<S> output;  // d_hidden, on the pre-softmax combination
};

template <typename S>
DropoutMasks<S> sample_dropout_masks(int d_embed, int d_hidden, double dropout_p,
                                     std::mt19937_64& rng);

template <typename S>
struct StepResult {
  DecoderState<S> state;
  Vec<S> attn;    // a_i
  Vec<S> alpha;   // attention row over source tokens
  Vec<S> logits;  // unnormalized next-token scores over |V_nl|
};

// One decoder step: embed the previous NL token, advance the LSTM cell,
// attend over the source rows, combine into logits. Softmax of the logits is
// the next-token distribution.
template <typename S>
StepResult<S> decoder_step(TokenId prev_nl_id, const DecoderState<S>& state,
                           const Mat<S>& context, const Params<S>& params,
                           const DropoutMasks<S>& masks);

// Per-step caches backward needs.
template <typename S>
struct StepTrace {
  TokenId input_id = 0;
  TokenId target_id = 0;
  DropoutMasks<S> masks;
  Vec<S> x_in;        // LSTM input after dropout
  Vec<S> gate_i, gate_f, gate_g, gate_o;
  Vec<S> c;           // new cell
  Vec<S> h;           // new hidden
  Vec<S> alpha;       // attention weights
  Vec<S> attn;        // a_i
  Vec<S> mix_raw;     // tanh(comb_hidden h + comb_attn a) before dropout
  Vec<S> mix;         // after dropout
  Vec<S> prob;        // softmax of logits
  S log_prob_target = 0;
};

template <typename S>
struct ForwardTrace {
  std::vector<TokenId> code_ids;
  Mat<S> context;
  std::vector<StepTrace<S>> steps;
  S nll = 0;
};

struct ForwardOptions {
  bool train = false;
  double dropout_p = 0.0;
  std::mt19937_64* rng = nullptr;  // required when train && dropout_p > 0
};

// Teacher-forced negative log likelihood of nl_ids[1..] given code_ids,
// summed over target positions (END included). Fills the trace when given.
template <typename S>
S forward_loss(const EncodedExample& ex, const Params<S>& params,
               const ForwardOptions& options, ForwardTrace<S>* trace = nullptr);

// Exact gradients of the traced nll with respect to every parameter matrix.
template <typename S>
Params<S> backward(const ForwardTrace<S>& trace, const Params<S>& params);

template <typename S>
void accumulate(Params<S>& into, const Params<S>& grads);

template <typename S>
struct AdamState {
  Params<S> m;
  Params<S> v;
  std::int64_t step = 0;

  static AdamState zeros(const ModelDims& dims) {
    return {Params<S>::zeros(dims), Params<S>::zeros(dims), 0};
  }
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// Global-norm clipping at hyper.grad_clip, then one Adam update. Throws
// NonFiniteGradientError naming the offending matrix; params are untouched then.
template <typename S>
void apply_gradients(Params<S>& params, const Params<S>& grads, AdamState<S>& opt,
                     const HyperParams& hyper);

}  // namespace diffscribe
