#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "diffscribe/errors.hpp"
#include "diffscribe/model.hpp"

using namespace diffscribe;

namespace {

EncodedExample make_example(std::mt19937_64& rng, const ModelDims& dims, int src_len,
                            int tgt_len) {
  EncodedExample ex;
  for (int i = 0; i < src_len; ++i)
    ex.code_ids.push_back(static_cast<TokenId>(rng() % dims.code_vocab));
  ex.nl_ids.push_back(SpecialIds::kStart);
  for (int i = 0; i < tgt_len - 1; ++i)
    ex.nl_ids.push_back(static_cast<TokenId>(rng() % dims.nl_vocab));
  ex.nl_ids.push_back(SpecialIds::kEnd);
  return ex;
}

}  // namespace

TEST_CASE("init_params is deterministic per seed and in range") {
  const ModelDims dims{12, 9, 6, 5};
  const auto a = init_params<float>(dims, 42);
  const auto b = init_params<float>(dims, 42);
  const auto c = init_params<float>(dims, 43);

  CHECK((a.nl_embed.array() == b.nl_embed.array()).all());
  CHECK((a.lstm_wx.array() == b.lstm_wx.array()).all());
  CHECK((a.out_proj.array() == b.out_proj.array()).all());
  CHECK_FALSE((a.nl_embed.array() == c.nl_embed.array()).all());

  visit_params(a, [&](const char* name, const auto& m) {
    if (std::string_view(name) == "lstm_bias") return;
    CHECK(m.minCoeff() >= -0.08f);
    CHECK(m.maxCoeff() <= 0.08f);
  });
  // bias: zeros except the forget block
  for (int i = 0; i < 4 * dims.d_hidden; ++i) {
    const bool forget = i >= dims.d_hidden && i < 2 * dims.d_hidden;
    CHECK(a.lstm_bias[i] == (forget ? 1.0f : 0.0f));
  }
}

TEST_CASE("encode_source is a pure row lookup") {
  const ModelDims dims{8, 5, 4, 3};
  const auto params = init_params<float>(dims, 7);

  const auto single = encode_source<float>({2}, params);
  CHECK(single.rows() == 1);
  CHECK((single.row(0).array() == params.code_embed.row(2).array()).all());

  const auto repeated = encode_source<float>({4, 4, 4}, params);
  CHECK((repeated.row(0).array() == repeated.row(1).array()).all());
  CHECK((repeated.row(1).array() == repeated.row(2).array()).all());

  const auto ordered = encode_source<float>({0, 3, 1}, params);
  CHECK(ordered.rows() == 3);
  CHECK((ordered.row(1).array() == params.code_embed.row(3).array()).all());

  CHECK_THROWS_AS(encode_source<float>({5}, params), BadIdError);
  CHECK_THROWS_AS(encode_source<float>({-1}, params), BadIdError);
}

TEST_CASE("attention on a single source row") {
  Mat<double> ctx(1, 3);
  ctx << 0.4, -0.2, 0.9;
  Vec<double> h(3);
  h << 1.0, 2.0, -0.5;
  const auto att = attention<double>(h, ctx);
  CHECK(att.alpha.size() == 1);
  CHECK(att.alpha[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((att.context - ctx.row(0).transpose()).norm() == doctest::Approx(0.0));
}

TEST_CASE("zero query gives uniform attention") {
  Mat<double> ctx(4, 2);
  ctx << 1, 2, -3, 4, 0.5, 0.25, 10, -10;
  const Vec<double> h = Vec<double>::Zero(2);
  const auto att = attention<double>(h, ctx);
  for (int j = 0; j < 4; ++j) CHECK(att.alpha[j] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("two-row attention matches the hand-computed softmax") {
  // scores (1.0, 0.0) -> alpha = (e / (e + 1), 1 / (e + 1))
  Mat<double> ctx(2, 2);
  ctx << 1.0, 5.0, 0.0, -3.0;
  Vec<double> h(2);
  h << 1.0, 0.0;
  const auto att = attention<double>(h, ctx);
  CHECK(att.alpha[0] == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  CHECK(att.alpha[1] == doctest::Approx(0.2689414213699951).epsilon(1e-12));
  const Vec<double> expected = 0.7310585786300049 * ctx.row(0).transpose() +
                               0.2689414213699951 * ctx.row(1).transpose();
  CHECK((att.context - expected).norm() < 1e-12);
}

TEST_CASE("attention rows stay normalized over random inputs") {
  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 200; ++iter) {
    const int k = 1 + static_cast<int>(rng() % 12);
    const int d = 1 + static_cast<int>(rng() % 8);
    Mat<float> ctx(k, d);
    Vec<float> h(d);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < d; ++j) ctx(i, j) = static_cast<float>(uniform01(rng) * 20 - 10);
    for (int j = 0; j < d; ++j) h[j] = static_cast<float>(uniform01(rng) * 20 - 10);
    const auto att = attention<float>(h, ctx);
    CHECK(std::abs(att.alpha.sum() - 1.0f) <= 1e-6f);
    CHECK(att.alpha.minCoeff() >= 0.0f);
    CHECK(att.alpha.maxCoeff() <= 1.0f);
  }
}

TEST_CASE("all-zero parameters give uniform next-token logits") {
  const ModelDims dims{9, 4, 3, 3};
  const auto params = ParamsD::zeros(dims);
  const auto ctx = encode_source<double>({0, 1}, params);
  const auto out = decoder_step<double>(0, initial_state<double>(3), ctx, params, {});
  CHECK(out.logits.isZero(0.0));
}

TEST_CASE("p=0 dropout masks reproduce the inference path") {
  const ModelDims dims{9, 4, 5, 3};
  const auto params = init_params<double>(dims, 11);
  const auto ctx = encode_source<double>({0, 1, 3}, params);
  std::mt19937_64 rng(1);
  const auto masks = sample_dropout_masks<double>(dims.d_embed, dims.d_hidden, 0.0, rng);
  const auto with = decoder_step<double>(2, initial_state<double>(3), ctx, params, masks);
  const auto without = decoder_step<double>(2, initial_state<double>(3), ctx, params, {});
  CHECK((with.logits - without.logits).norm() == doctest::Approx(0.0));
}

// Independent oracle: the closed-form expression evaluated with scalar
// arithmetic, d_hidden = 2, single source token.
TEST_CASE("decoder_step matches a hand-evaluated tiny model") {
  const int d = 2;
  const ModelDims dims{3, 2, d, d};
  ParamsD params = ParamsD::zeros(dims);
  params.nl_embed << 0.1, -0.2, 0.3, 0.05, -0.4, 0.25;
  params.code_embed << 0.2, -0.1, 0.15, 0.3;
  for (int r = 0; r < 4 * d; ++r)
    for (int c = 0; c < d; ++c) {
      params.lstm_wx(r, c) = 0.01 * (r + 1) - 0.02 * c;
      params.lstm_wh(r, c) = -0.015 * (r + 1) + 0.01 * c;
    }
  for (int r = 0; r < 4 * d; ++r) params.lstm_bias[r] = 0.05 * (r % 3);
  params.out_proj << 0.3, -0.2, 0.1, 0.4, -0.25, 0.15;
  params.comb_hidden << 0.5, -0.1, 0.2, 0.3;
  params.comb_attn << -0.3, 0.2, 0.1, -0.4;

  const TokenId prev = 1;
  DecoderState<double> state;
  state.h = Vec<double>(d);
  state.h << 0.02, -0.07;
  state.c = Vec<double>(d);
  state.c << 0.01, 0.03;
  const std::vector<TokenId> code{1};
  const auto ctx = encode_source<double>(code, params);
  const auto out = decoder_step<double>(prev, state, ctx, params, {});

  // scalar re-evaluation
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double x[2] = {params.nl_embed(prev, 0), params.nl_embed(prev, 1)};
  double pre[8];
  for (int r = 0; r < 8; ++r) {
    pre[r] = params.lstm_bias[r];
    for (int c = 0; c < 2; ++c)
      pre[r] += params.lstm_wx(r, c) * x[c] + params.lstm_wh(r, c) * state.h[c];
  }
  double h_new[2], c_new[2];
  for (int j = 0; j < 2; ++j) {
    const double i_g = sig(pre[j]);
    const double f_g = sig(pre[2 + j]);
    const double g_g = std::tanh(pre[4 + j]);
    const double o_g = sig(pre[6 + j]);
    c_new[j] = f_g * state.c[j] + i_g * g_g;
    h_new[j] = o_g * std::tanh(c_new[j]);
  }
  // single source row: alpha = 1, a = embedding of code token
  double a_vec[2] = {params.code_embed(1, 0), params.code_embed(1, 1)};
  double u[2];
  for (int j = 0; j < 2; ++j) {
    double v = 0;
    for (int c = 0; c < 2; ++c)
      v += params.comb_hidden(j, c) * h_new[c] + params.comb_attn(j, c) * a_vec[c];
    u[j] = std::tanh(v);
  }
  for (int r = 0; r < 3; ++r) {
    double logit = 0;
    for (int c = 0; c < 2; ++c) logit += params.out_proj(r, c) * u[c];
    CHECK(out.logits[r] == doctest::Approx(logit).epsilon(1e-12));
  }
  CHECK(out.alpha[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.state.h[0] == doctest::Approx(h_new[0]).epsilon(1e-12));
  CHECK(out.state.c[1] == doctest::Approx(c_new[1]).epsilon(1e-12));
}

TEST_CASE("zero parameters give nll = L * ln(V)") {
  const ModelDims dims{7, 3, 4, 4};
  const auto params = ParamsD::zeros(dims);
  EncodedExample ex;
  ex.code_ids = {0, 2};
  ex.nl_ids = {SpecialIds::kStart, 3, 4, 5, SpecialIds::kEnd};  // 4 targets
  const double nll = forward_loss<double>(ex, params, {});
  CHECK(nll == doctest::Approx(4.0 * std::log(7.0)).epsilon(1e-12));
}

TEST_CASE("loss is additive over duplicated examples") {
  const ModelDims dims{10, 6, 5, 4};
  const auto params = init_params<double>(dims, 5);
  std::mt19937_64 rng(8);
  const auto ex = make_example(rng, dims, 3, 4);
  const double one = forward_loss<double>(ex, params, {});
  const double two = forward_loss<double>(ex, params, {}) + forward_loss<double>(ex, params, {});
  CHECK(two == doctest::Approx(2.0 * one).epsilon(1e-15));
}

TEST_CASE("exp(-nll) equals the product of per-step target probabilities") {
  const ModelDims dims{11, 5, 4, 6};
  const auto params = init_params<double>(dims, 21);
  std::mt19937_64 rng(4);
  for (int iter = 0; iter < 10; ++iter) {
    const auto ex = make_example(rng, dims, 1 + static_cast<int>(rng() % 5),
                                 2 + static_cast<int>(rng() % 4));
    ForwardTrace<double> trace;
    const double nll = forward_loss<double>(ex, params, {}, &trace);
    double product = 1.0;
    for (const auto& step : trace.steps) product *= step.prob[step.target_id];
    CHECK(std::exp(-nll) == doctest::Approx(product).epsilon(1e-9));
  }
}

TEST_CASE("softmax is shift invariant") {
  const ModelDims dims{9, 4, 3, 3};
  const auto params = init_params<double>(dims, 31);
  std::mt19937_64 rng(6);
  const auto ex = make_example(rng, dims, 3, 3);

  // Adding the same row to every out_proj row shifts all logits by a constant.
  ParamsD shifted = params;
  Vec<double> delta(3);
  delta << 17.3, -2.0, 4.5;
  shifted.out_proj.rowwise() += delta.transpose();

  ForwardTrace<double> base_trace, shift_trace;
  forward_loss<double>(ex, params, {}, &base_trace);
  forward_loss<double>(ex, shifted, {}, &shift_trace);
  for (std::size_t s = 0; s < base_trace.steps.size(); ++s) {
    const auto diff =
        (base_trace.steps[s].prob - shift_trace.steps[s].prob).cwiseAbs().maxCoeff();
    CHECK(diff <= 1e-12);
  }
}

TEST_CASE("inference forward_loss is pure") {
  const ModelDims dims{10, 6, 5, 4};
  const auto params = init_params<float>(dims, 5);
  std::mt19937_64 rng(12);
  const auto ex = make_example(rng, dims, 4, 3);
  const float a = forward_loss<float>(ex, params, {});
  const float b = forward_loss<float>(ex, params, {});
  CHECK(a == b);
}

TEST_CASE("forward_loss rejects bad ids and empty inputs") {
  const ModelDims dims{6, 4, 3, 3};
  const auto params = init_params<float>(dims, 2);
  EncodedExample no_code;
  no_code.nl_ids = {SpecialIds::kStart, SpecialIds::kEnd};
  CHECK_THROWS(forward_loss<float>(no_code, params, {}));

  EncodedExample bad_target;
  bad_target.code_ids = {0};
  bad_target.nl_ids = {SpecialIds::kStart, 99, SpecialIds::kEnd};
  CHECK_THROWS_AS(forward_loss<float>(bad_target, params, {}), BadIdError);
}
