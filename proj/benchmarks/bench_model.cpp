#include <benchmark/benchmark.h>

#include <random>

#include "diffscribe/decode.hpp"
#include "diffscribe/model.hpp"

using namespace diffscribe;

namespace {

EncodedExample make_example(std::mt19937_64& rng, const ModelDims& dims, int src_len,
                            int tgt_len) {
  EncodedExample ex;
  for (int i = 0; i < src_len; ++i)
    ex.code_ids.push_back(static_cast<TokenId>(rng() % dims.code_vocab));
  ex.nl_ids.push_back(SpecialIds::kStart);
  for (int i = 0; i < tgt_len; ++i)
    ex.nl_ids.push_back(static_cast<TokenId>(rng() % dims.nl_vocab));
  ex.nl_ids.push_back(SpecialIds::kEnd);
  return ex;
}

}  // namespace

static void DecoderStep(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const ModelDims dims{5000, 8000, d, d};
  const ParamsF params = init_params<float>(dims, 1);
  std::vector<TokenId> code;
  std::mt19937_64 rng(2);
  for (int j = 0; j < 40; ++j) code.push_back(static_cast<TokenId>(rng() % dims.code_vocab));
  const Mat<float> ctx = encode_source(code, params);
  DecoderState<float> st = initial_state<float>(d);
  for (auto _ : state) {
    auto out = decoder_step<float>(17, st, ctx, params, {});
    benchmark::DoNotOptimize(out.logits.data());
  }
}
BENCHMARK(DecoderStep)->Arg(64)->Arg(256);

static void ForwardBackward(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const ModelDims dims{5000, 8000, d, d};
  const ParamsF params = init_params<float>(dims, 1);
  std::mt19937_64 rng(3);
  const EncodedExample ex = make_example(rng, dims, 40, 12);
  for (auto _ : state) {
    ForwardTrace<float> trace;
    forward_loss<float>(ex, params, {}, &trace);
    ParamsF grads = backward(trace, params);
    benchmark::DoNotOptimize(grads.out_proj.data());
  }
}
BENCHMARK(ForwardBackward)->Arg(64)->Arg(256);

static void BeamSearch10(benchmark::State& state) {
  const ModelDims dims{2000, 3000, 128, 128};
  const ParamsF params = init_params<float>(dims, 4);
  std::mt19937_64 rng(5);
  std::vector<TokenId> code;
  for (int j = 0; j < 30; ++j) code.push_back(static_cast<TokenId>(rng() % dims.code_vocab));
  for (auto _ : state) {
    auto ranked = beam_search(code, params, {10, 20, false});
    benchmark::DoNotOptimize(ranked.data());
  }
}
BENCHMARK(BeamSearch10);

BENCHMARK_MAIN();
