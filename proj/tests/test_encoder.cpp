#include "doctest.h"
#include "scn/encoder.hpp"
#include "test_util.hpp"

using namespace scn;

TEST_CASE("stub embeddings are deterministic unit vectors") {
  StubEmbedding stub(32, 9);
  Eigen::VectorXd a = stub.lookup("died");
  Eigen::VectorXd b = stub.lookup("died");
  CHECK((a - b).norm() == 0.0);
  CHECK(a.norm() == doctest::Approx(1.0));
  CHECK((stub.lookup("died") - stub.lookup("lived")).norm() > 1e-6);

  StubEmbedding other_seed(32, 10);
  CHECK((other_seed.lookup("died") - a).norm() > 1e-6);

  Sentence s = testutil::sent("x", "he died there");
  Eigen::MatrixXd m = embed_tokens(s, stub);
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 32);
  CHECK((m.row(1).transpose() - a).norm() == 0.0);
}

TEST_CASE("embed_tokens rejects empty sentences") {
  StubEmbedding stub(8, 1);
  Sentence s;
  s.id = "empty";
  CHECK_THROWS_AS(embed_tokens(s, stub), DataError);
}

TEST_CASE("encode_sentence matches a hand-rolled recurrence") {
  Rng rng(21);
  EncoderParams p = make_encoder_params(2, 4, rng);
  Eigen::MatrixXd words(2, 2);
  words << 0.3, -0.7, 1.1, 0.4;

  SentenceEncoding enc = encode_sentence(words, p);
  Eigen::VectorXd expect = testutil::oracle_bilstm(words, p);
  CHECK((enc.sentence_vector - expect).norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(enc.context_outputs.rows() == 2);
  CHECK(enc.context_outputs.cols() == 4);
  CHECK(enc.word_vectors == words);

  SUBCASE("longer sentences and wider states agree too") {
    Rng rng2(22);
    EncoderParams big = make_encoder_params(3, 6, rng2);
    Eigen::MatrixXd w(5, 3);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng2.gaussian();
    CHECK((encode_sentence(w, big).sentence_vector - testutil::oracle_bilstm(w, big)).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("single-token sentence vector equals the two final states") {
  Rng rng(23);
  EncoderParams p = make_encoder_params(3, 4, rng);
  Eigen::MatrixXd one(1, 3);
  one << 0.2, -0.1, 0.5;
  SentenceEncoding enc = encode_sentence(one, p);
  // with one token the per-token context output is exactly the final state
  CHECK((enc.context_outputs.row(0).transpose() - enc.sentence_vector).norm() ==
        doctest::Approx(0.0));
}

TEST_CASE("zero weights and biases give an all-zero encoding") {
  EncoderParams p;
  p.input_dim = 2;
  p.hidden = 4;
  p.w_fwd = Eigen::MatrixXd::Zero(8, 2);
  p.r_fwd = Eigen::MatrixXd::Zero(8, 2);
  p.b_fwd = Eigen::MatrixXd::Zero(8, 1);
  p.w_bwd = p.w_fwd;
  p.r_bwd = p.r_fwd;
  p.b_bwd = p.b_fwd;
  Eigen::MatrixXd words(2, 2);
  words << 1.0, 2.0, 3.0, 4.0;
  // all gates sit at sigmoid(0)/tanh(0), so the cell never accumulates
  CHECK(encode_sentence(words, p).sentence_vector.norm() == doctest::Approx(0.0));
  CHECK((encode_sentence(words, p).sentence_vector -
         testutil::oracle_bilstm(words, p)).norm() == doctest::Approx(0.0));
}

TEST_CASE("encoding is a pure function of tokens and params") {
  Rng rng(24);
  EncoderParams p = make_encoder_params(4, 6, rng);
  StubEmbedding stub(4, 2);
  Sentence s = testutil::sent("x", "alpha beta gamma delta");
  Eigen::MatrixXd words = embed_tokens(s, stub);
  SentenceEncoding a = encode_sentence(words, p);
  SentenceEncoding b = encode_sentence(words, p);
  CHECK((a.sentence_vector - b.sentence_vector).norm() == 0.0);
  CHECK((a.context_outputs - b.context_outputs).norm() == 0.0);
}

TEST_CASE("encoder rejects dimension mismatches and bad hidden sizes") {
  Rng rng(25);
  EncoderParams p = make_encoder_params(4, 6, rng);
  CHECK_THROWS_AS(encode_sentence(Eigen::MatrixXd::Zero(2, 3), p), ConfigError);
  CHECK_THROWS_AS(make_encoder_params(4, 5, rng), ConfigError);
  CHECK_THROWS_AS(make_encoder_params(4, 0, rng), ConfigError);
}

TEST_CASE("encoding cache covers the query and every candidate") {
  auto data = testutil::make_separable_mixtures(1, 4, 10, 77);
  const Mixture& m = data.mixtures[0];
  Rng rng(26);
  EncoderParams p = make_encoder_params(16, 8, rng);
  StubEmbedding stub(16, 3);
  EncodingCache cache(m, stub, p);

  CHECK(cache.size() == m.candidates.size() + 1);  // query + candidates
  CHECK(cache.contains(m.query.id));

  const SentenceEncoding& hit = cache.at(m.candidates[0].id);
  SentenceEncoding fresh = encode_sentence(embed_tokens(m.candidates[0], stub), p);
  CHECK((hit.sentence_vector - fresh.sentence_vector).norm() == 0.0);

  Eigen::VectorXd mean = cache.mean_word(m.candidates[0].id);
  CHECK((mean - fresh.word_vectors.colwise().mean().transpose()).norm() ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(cache.at("no-such-id"), DataError);
}
