#include <benchmark/benchmark.h>

#include "scn/decoder.hpp"
#include "scn/evalkit.hpp"
#include "scn/training.hpp"

namespace {

using namespace scn;

Scenario synth_scenario(const std::string& id, size_t n_sentences, Rng& rng) {
  Scenario sc;
  sc.scenario_id = id;
  for (size_t k = 0; k < n_sentences; ++k) {
    std::string text;
    for (int t = 0; t < 7; ++t) {
      if (t) text += ' ';
      text += id + "tok" + std::to_string(rng.below(30));
    }
    Sentence s;
    s.id = id + "-s" + std::to_string(k);
    s.text = text;
    s.tokens = tokenize(text);
    sc.sentences.push_back(std::move(s));
  }
  return sc;
}

Mixture bench_mixture(uint64_t seed) {
  Rng rng(seed);
  Scenario target = synth_scenario("t", 6, rng);
  std::vector<Scenario> distractors{synth_scenario("d1", 6, rng), synth_scenario("d2", 6, rng),
                                    synth_scenario("d3", 6, rng)};
  std::vector<Sentence> pool;
  for (int i = 0; i < 3; ++i) {
    Scenario extra = synth_scenario("x" + std::to_string(i), 6, rng);
    pool.insert(pool.end(), extra.sentences.begin(), extra.sentences.end());
  }
  return make_hybrid(target, distractors, pool, 30, seed);
}

ModelParams bench_params(HeadType head) {
  ModelConfig mc;
  mc.head = head;
  mc.mode = TermMode::kFixed;
  mc.embed_dim = 64;
  mc.hidden = 64;
  mc.relation_width = 32;
  mc.provider = {"stub", 64, 3, ""};
  return init_model_params(mc, 17);
}

void BM_EncodeSentence(benchmark::State& state) {
  StubEmbedding provider(64, 3);
  ModelParams params = bench_params(HeadType::kComp);
  Mixture m = bench_mixture(1);
  Eigen::MatrixXd words = embed_tokens(m.candidates[0], provider);
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode_sentence(words, params.encoder));
  }
}
BENCHMARK(BM_EncodeSentence);

void BM_ScoreGridCompInsRn(benchmark::State& state) {
  StubEmbedding provider(64, 3);
  ModelParams params = bench_params(HeadType::kCompInsRn);
  Mixture m = bench_mixture(2);
  EncodingCache cache(m, provider, params.encoder);
  std::vector<Eigen::VectorXd> t_vecs, c_vecs;
  std::vector<Eigen::MatrixXd> t_words, c_words;
  t_vecs.push_back(cache.at(m.query.id).sentence_vector);
  t_words.push_back(cache.at(m.query.id).word_vectors);
  for (const auto& c : m.candidates) {
    c_vecs.push_back(cache.at(c.id).sentence_vector);
    c_words.push_back(cache.at(c.id).word_vectors);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(comp_ins_rn_scores(t_vecs, c_vecs, t_words, c_words,
                                                params.attention, params.insertion,
                                                params.relation));
  }
}
BENCHMARK(BM_ScoreGridCompInsRn);

void BM_MakeHybridMixture(benchmark::State& state) {
  uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bench_mixture(seed++));
  }
}
BENCHMARK(BM_MakeHybridMixture);

void BM_DecodeFixed(benchmark::State& state) {
  StubEmbedding provider(64, 3);
  ModelParams params = bench_params(HeadType::kCompInsRn);
  Mixture m = bench_mixture(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_fixed(m, params, provider, 5));
  }
}
BENCHMARK(BM_DecodeFixed);

void BM_TrainStepCompInsRn(benchmark::State& state) {
  StubEmbedding provider(64, 3);
  ModelParams params = bench_params(HeadType::kCompInsRn);
  Mixture m = bench_mixture(4);
  Rng rng(5);
  auto states = sample_teacher_states(m, rng, TermMode::kFixed);
  for (auto _ : state) {
    BoundModel bm = bind_model(params, true);
    ad::Var loss = example_loss_graph(m, states[2], bm, params.config, provider);
    ad::backward(loss);
    benchmark::DoNotOptimize(loss.scalar());
  }
}
BENCHMARK(BM_TrainStepCompInsRn);

}  // namespace

BENCHMARK_MAIN();
