#include "diffscribe/model.hpp"

#include <cmath>
#include <stdexcept>

#include "diffscribe/errors.hpp"

namespace diffscribe {
namespace {

template <typename S>
Vec<S> sigmoid(const Vec<S>& x) {
  return ((-x.array()).exp() + S(1)).inverse().matrix();
}

template <typename S>
void check_nl_id(TokenId id, const Params<S>& params) {
  if (id < 0 || id >= params.nl_embed.rows())
    throw BadIdError("NL token id " + std::to_string(id) + " out of range [0, " +
                     std::to_string(params.nl_embed.rows()) + ")");
}

}  // namespace

template <typename S>
Params<S> Params<S>::zeros(const ModelDims& d) {
  Params<S> p;
  p.nl_embed = Mat<S>::Zero(d.nl_vocab, d.d_embed);
  p.code_embed = Mat<S>::Zero(d.code_vocab, d.d_hidden);
  p.lstm_wx = Mat<S>::Zero(4 * d.d_hidden, d.d_embed);
  p.lstm_wh = Mat<S>::Zero(4 * d.d_hidden, d.d_hidden);
  p.lstm_bias = Vec<S>::Zero(4 * d.d_hidden);
  p.out_proj = Mat<S>::Zero(d.nl_vocab, d.d_hidden);
  p.comb_hidden = Mat<S>::Zero(d.d_hidden, d.d_hidden);
  p.comb_attn = Mat<S>::Zero(d.d_hidden, d.d_hidden);
  return p;
}

template <typename S>
Params<S> init_params(const ModelDims& dims, std::uint64_t seed) {
  if (dims.nl_vocab < 1 || dims.code_vocab < 1 || dims.d_embed < 1 || dims.d_hidden < 1)
    throw std::invalid_argument("model dimensions must be positive");
  Params<S> p = Params<S>::zeros(dims);
  std::mt19937_64 rng(seed);
  visit_params(p, [&](const char* name, auto& m) {
    if (std::string_view(name) == "lstm_bias") return;  // biases start at zero
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        m(r, c) = static_cast<S>(uniform01(rng) * 0.16 - 0.08);
  });
  p.lstm_bias.segment(dims.d_hidden, dims.d_hidden).setConstant(S(1));  // forget gate
  return p;
}

template <typename S>
Mat<S> encode_source(const std::vector<TokenId>& code_ids, const Params<S>& params) {
  Mat<S> context(static_cast<Eigen::Index>(code_ids.size()), params.code_embed.cols());
  for (std::size_t j = 0; j < code_ids.size(); ++j) {
    const TokenId id = code_ids[j];
    if (id < 0 || id >= params.code_embed.rows())
      throw BadIdError("code token id " + std::to_string(id) + " out of range [0, " +
                       std::to_string(params.code_embed.rows()) + ")");
    context.row(static_cast<Eigen::Index>(j)) = params.code_embed.row(id);
  }
  return context;
}

template <typename S>
AttentionResult<S> attention(const Vec<S>& h, const Mat<S>& context_rows) {
  // Normalization runs in double so stored rows sum to 1 well within 1e-6
  // even in the float instantiation.
  Eigen::VectorXd scores = (context_rows * h).template cast<double>();
  const double max_score = scores.maxCoeff();
  Eigen::VectorXd expd = (scores.array() - max_score).exp();
  AttentionResult<S> out;
  out.alpha = (expd / expd.sum()).template cast<S>();
  out.context = context_rows.transpose() * out.alpha;
  return out;
}

template <typename S>
DropoutMasks<S> sample_dropout_masks(int d_embed, int d_hidden, double dropout_p,
                                     std::mt19937_64& rng) {
  DropoutMasks<S> masks;
  masks.active = true;
  const S keep_scale = static_cast<S>(1.0 / (1.0 - dropout_p));
  auto fill = [&](Vec<S>& mask, int n) {
    mask.resize(n);
    for (int i = 0; i < n; ++i)
      mask[i] = uniform01(rng) < dropout_p ? S(0) : keep_scale;
  };
  fill(masks.embed, d_embed);
  fill(masks.input, d_embed);
  fill(masks.output, d_hidden);
  return masks;
}

namespace {

// Shared forward step; fills the trace caches when given.
template <typename S>
StepResult<S> step_impl(TokenId prev_nl_id, const DecoderState<S>& state,
                        const Mat<S>& context, const Params<S>& params,
                        const DropoutMasks<S>& masks, StepTrace<S>* trace) {
  check_nl_id(prev_nl_id, params);
  const Eigen::Index d_hidden = params.comb_hidden.rows();

  Vec<S> x = params.nl_embed.row(prev_nl_id).transpose();
  if (masks.active) x = x.cwiseProduct(masks.embed).cwiseProduct(masks.input);

  Vec<S> pre = params.lstm_wx * x + params.lstm_wh * state.h + params.lstm_bias;
  Vec<S> gate_i = sigmoid<S>(pre.segment(0, d_hidden));
  Vec<S> gate_f = sigmoid<S>(pre.segment(d_hidden, d_hidden));
  Vec<S> gate_g = pre.segment(2 * d_hidden, d_hidden).array().tanh().matrix();
  Vec<S> gate_o = sigmoid<S>(pre.segment(3 * d_hidden, d_hidden));

  StepResult<S> out;
  out.state.c = gate_f.cwiseProduct(state.c) + gate_i.cwiseProduct(gate_g);
  out.state.h = gate_o.cwiseProduct(out.state.c.array().tanh().matrix());

  AttentionResult<S> att = attention(out.state.h, context);
  out.attn = att.context;
  out.alpha = att.alpha;

  Vec<S> mix_raw =
      (params.comb_hidden * out.state.h + params.comb_attn * out.attn).array().tanh().matrix();
  Vec<S> mix = masks.active ? mix_raw.cwiseProduct(masks.output).eval() : mix_raw;
  out.logits = params.out_proj * mix;

  if (trace) {
    trace->input_id = prev_nl_id;
    trace->masks = masks;
    trace->x_in = std::move(x);
    trace->gate_i = std::move(gate_i);
    trace->gate_f = std::move(gate_f);
    trace->gate_g = std::move(gate_g);
    trace->gate_o = std::move(gate_o);
    trace->c = out.state.c;
    trace->h = out.state.h;
    trace->alpha = out.alpha;
    trace->attn = out.attn;
    trace->mix_raw = std::move(mix_raw);
    trace->mix = std::move(mix);
  }
  return out;
}

}  // namespace

template <typename S>
StepResult<S> decoder_step(TokenId prev_nl_id, const DecoderState<S>& state,
                           const Mat<S>& context, const Params<S>& params,
                           const DropoutMasks<S>& masks) {
  return step_impl(prev_nl_id, state, context, params, masks,
                   static_cast<StepTrace<S>*>(nullptr));
}

template <typename S>
S forward_loss(const EncodedExample& ex, const Params<S>& params,
               const ForwardOptions& options, ForwardTrace<S>* trace) {
  if (ex.code_ids.empty()) throw std::invalid_argument("code_ids must be non-empty");
  if (ex.nl_ids.size() < 2)
    throw std::invalid_argument("nl_ids must contain START and END");

  const int d_hidden = static_cast<int>(params.comb_hidden.rows());
  const int d_embed = static_cast<int>(params.nl_embed.cols());
  const bool use_dropout = options.train && options.dropout_p > 0.0;
  if (use_dropout && options.rng == nullptr)
    throw std::invalid_argument("training with dropout requires an rng");

  Mat<S> context = encode_source(ex.code_ids, params);
  if (trace) {
    trace->code_ids = ex.code_ids;
    trace->context = context;
    trace->steps.clear();
    trace->steps.reserve(ex.nl_ids.size() - 1);
  }

  DecoderState<S> state = initial_state<S>(d_hidden);
  S nll = 0;
  for (std::size_t i = 0; i + 1 < ex.nl_ids.size(); ++i) {
    const TokenId target = ex.nl_ids[i + 1];
    check_nl_id(target, params);

    DropoutMasks<S> masks;
    if (use_dropout)
      masks = sample_dropout_masks<S>(d_embed, d_hidden, options.dropout_p, *options.rng);

    StepTrace<S> step_trace;
    StepResult<S> step = step_impl(ex.nl_ids[i], state, context, params, masks,
                                   trace ? &step_trace : nullptr);

    // log softmax via log-sum-exp
    const S max_logit = step.logits.maxCoeff();
    Vec<S> shifted = (step.logits.array() - max_logit).exp().matrix();
    const S log_z = max_logit + std::log(shifted.sum());
    const S log_prob = step.logits[target] - log_z;
    nll -= log_prob;

    if (trace) {
      step_trace.target_id = target;
      step_trace.prob = shifted / shifted.sum();
      step_trace.log_prob_target = log_prob;
      trace->steps.push_back(std::move(step_trace));
    }
    state = std::move(step.state);
  }
  if (trace) trace->nll = nll;
  return nll;
}

template <typename S>
Params<S> backward(const ForwardTrace<S>& trace, const Params<S>& params) {
  const Eigen::Index d_hidden = params.comb_hidden.rows();
  Params<S> grads = Params<S>::zeros(params.dims());
  const Mat<S>& context = trace.context;

  Vec<S> dh_next = Vec<S>::Zero(d_hidden);
  Vec<S> dc_next = Vec<S>::Zero(d_hidden);

  for (std::size_t si = trace.steps.size(); si-- > 0;) {
    const StepTrace<S>& st = trace.steps[si];

    // softmax + nll
    Vec<S> dlogits = st.prob;
    dlogits[st.target_id] -= S(1);

    grads.out_proj.noalias() += dlogits * st.mix.transpose();
    Vec<S> dmix = params.out_proj.transpose() * dlogits;
    if (st.masks.active) dmix = dmix.cwiseProduct(st.masks.output);
    Vec<S> dmix_pre =
        (S(1) - st.mix_raw.array().square()).matrix().cwiseProduct(dmix);

    grads.comb_hidden.noalias() += dmix_pre * st.h.transpose();
    grads.comb_attn.noalias() += dmix_pre * st.attn.transpose();
    Vec<S> dh = params.comb_hidden.transpose() * dmix_pre + dh_next;
    Vec<S> da = params.comb_attn.transpose() * dmix_pre;

    // attention: a = ctx^T alpha, alpha = softmax(ctx h)
    Vec<S> dalpha = context * da;
    const S dot = st.alpha.dot(dalpha);
    Vec<S> dscores = st.alpha.cwiseProduct((dalpha.array() - dot).matrix());
    dh.noalias() += context.transpose() * dscores;
    for (std::size_t j = 0; j < trace.code_ids.size(); ++j) {
      grads.code_embed.row(trace.code_ids[j]).noalias() +=
          st.alpha[static_cast<Eigen::Index>(j)] * da.transpose() +
          dscores[static_cast<Eigen::Index>(j)] * st.h.transpose();
    }

    // LSTM cell
    const Vec<S> tanh_c = st.c.array().tanh().matrix();
    const Vec<S> c_prev = si > 0 ? trace.steps[si - 1].c : Vec<S>::Zero(d_hidden).eval();

    Vec<S> do_gate = dh.cwiseProduct(tanh_c);
    Vec<S> dc = dh.cwiseProduct(st.gate_o)
                    .cwiseProduct((S(1) - tanh_c.array().square()).matrix()) +
                dc_next;
    Vec<S> df = dc.cwiseProduct(c_prev);
    Vec<S> di = dc.cwiseProduct(st.gate_g);
    Vec<S> dg = dc.cwiseProduct(st.gate_i);
    dc_next = dc.cwiseProduct(st.gate_f);

    Vec<S> dpre(4 * d_hidden);
    dpre.segment(0, d_hidden) =
        di.cwiseProduct(st.gate_i).cwiseProduct((S(1) - st.gate_i.array()).matrix());
    dpre.segment(d_hidden, d_hidden) =
        df.cwiseProduct(st.gate_f).cwiseProduct((S(1) - st.gate_f.array()).matrix());
    dpre.segment(2 * d_hidden, d_hidden) =
        dg.cwiseProduct((S(1) - st.gate_g.array().square()).matrix());
    dpre.segment(3 * d_hidden, d_hidden) =
        do_gate.cwiseProduct(st.gate_o).cwiseProduct((S(1) - st.gate_o.array()).matrix());

    const Vec<S> h_prev = si > 0 ? trace.steps[si - 1].h : Vec<S>::Zero(d_hidden);
    grads.lstm_wx.noalias() += dpre * st.x_in.transpose();
    grads.lstm_wh.noalias() += dpre * h_prev.transpose();
    grads.lstm_bias += dpre;

    dh_next = params.lstm_wh.transpose() * dpre;
    Vec<S> dx = params.lstm_wx.transpose() * dpre;
    if (st.masks.active)
      dx = dx.cwiseProduct(st.masks.input).cwiseProduct(st.masks.embed);
    grads.nl_embed.row(st.input_id) += dx.transpose();
  }
  return grads;
}

template <typename S>
void accumulate(Params<S>& into, const Params<S>& grads) {
  into.nl_embed += grads.nl_embed;
  into.code_embed += grads.code_embed;
  into.lstm_wx += grads.lstm_wx;
  into.lstm_wh += grads.lstm_wh;
  into.lstm_bias += grads.lstm_bias;
  into.out_proj += grads.out_proj;
  into.comb_hidden += grads.comb_hidden;
  into.comb_attn += grads.comb_attn;
}

template <typename S>
void apply_gradients(Params<S>& params, const Params<S>& grads, AdamState<S>& opt,
                     const HyperParams& hyper) {
  double sq_norm = 0;
  visit_params(grads, [&](const char* name, const auto& g) {
    if (!g.allFinite())
      throw NonFiniteGradientError(std::string("non-finite gradient in ") + name);
    sq_norm += static_cast<double>(g.squaredNorm());
  });
  const double norm = std::sqrt(sq_norm);
  const S scale =
      norm > hyper.grad_clip ? static_cast<S>(hyper.grad_clip / norm) : S(1);

  opt.step += 1;
  const double bias1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(opt.step));
  const double bias2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(opt.step));
  const S beta1 = static_cast<S>(kAdamBeta1);
  const S beta2 = static_cast<S>(kAdamBeta2);
  const S lr = static_cast<S>(hyper.learning_rate);
  const S eps = static_cast<S>(kAdamEpsilon);

  auto update = [&](auto& p, auto& m, auto& v, const auto& g_raw) {
    auto g = (g_raw.array() * scale).eval();
    m.array() = beta1 * m.array() + (S(1) - beta1) * g;
    v.array() = beta2 * v.array() + (S(1) - beta2) * g.square();
    auto m_hat = (m.array() / static_cast<S>(bias1)).eval();
    auto v_hat = (v.array() / static_cast<S>(bias2)).eval();
    p.array() -= lr * m_hat / (v_hat.sqrt() + eps);
  };
  update(params.nl_embed, opt.m.nl_embed, opt.v.nl_embed, grads.nl_embed);
  update(params.code_embed, opt.m.code_embed, opt.v.code_embed, grads.code_embed);
  update(params.lstm_wx, opt.m.lstm_wx, opt.v.lstm_wx, grads.lstm_wx);
  update(params.lstm_wh, opt.m.lstm_wh, opt.v.lstm_wh, grads.lstm_wh);
  update(params.lstm_bias, opt.m.lstm_bias, opt.v.lstm_bias, grads.lstm_bias);
  update(params.out_proj, opt.m.out_proj, opt.v.out_proj, grads.out_proj);
  update(params.comb_hidden, opt.m.comb_hidden, opt.v.comb_hidden, grads.comb_hidden);
  update(params.comb_attn, opt.m.comb_attn, opt.v.comb_attn, grads.comb_attn);
}

// Training runs in float; the gradient-check suite uses the double instantiation.
template struct Params<float>;
template struct Params<double>;
template Params<float> init_params<float>(const ModelDims&, std::uint64_t);
template Params<double> init_params<double>(const ModelDims&, std::uint64_t);
template Mat<float> encode_source<float>(const std::vector<TokenId>&, const Params<float>&);
template Mat<double> encode_source<double>(const std::vector<TokenId>&, const Params<double>&);
template AttentionResult<float> attention<float>(const Vec<float>&, const Mat<float>&);
template AttentionResult<double> attention<double>(const Vec<double>&, const Mat<double>&);
template DropoutMasks<float> sample_dropout_masks<float>(int, int, double, std::mt19937_64&);
template DropoutMasks<double> sample_dropout_masks<double>(int, int, double, std::mt19937_64&);
template StepResult<float> decoder_step<float>(TokenId, const DecoderState<float>&,
                                               const Mat<float>&, const Params<float>&,
                                               const DropoutMasks<float>&);
template StepResult<double> decoder_step<double>(TokenId, const DecoderState<double>&,
                                                 const Mat<double>&, const Params<double>&,
                                                 const DropoutMasks<double>&);
template float forward_loss<float>(const EncodedExample&, const Params<float>&,
                                   const ForwardOptions&, ForwardTrace<float>*);
template double forward_loss<double>(const EncodedExample&, const Params<double>&,
                                     const ForwardOptions&, ForwardTrace<double>*);
template Params<float> backward<float>(const ForwardTrace<float>&, const Params<float>&);
template Params<double> backward<double>(const ForwardTrace<double>&, const Params<double>&);
template void accumulate<float>(Params<float>&, const Params<float>&);
template void accumulate<double>(Params<double>&, const Params<double>&);
template void apply_gradients<float>(Params<float>&, const Params<float>&, AdamState<float>&,
                                     const HyperParams&);
template void apply_gradients<double>(Params<double>&, const Params<double>&,
                                      AdamState<double>&, const HyperParams&);

}  // namespace diffscribe
