#include "scn/encoder.hpp"

#include <cmath>

namespace scn {

namespace {

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = stddev * rng.gaussian();
  }
  return m;
}

/// One LSTM direction over the token range [0, n); step() maps loop index
/// to token position so the backward pass just reverses it.
ad::Var run_direction(const ad::Var& words, const ad::Var& w, const ad::Var& r, const ad::Var& b,
                      int half, bool reversed, std::vector<ad::Var>* states_out) {
  const Eigen::Index n = words.rows();
  ad::Var h = ad::constant(Eigen::MatrixXd::Zero(half, 1));
  ad::Var c = ad::constant(Eigen::MatrixXd::Zero(half, 1));
  if (states_out) states_out->assign(n, ad::Var());
  for (Eigen::Index step = 0; step < n; ++step) {
    Eigen::Index t = reversed ? n - 1 - step : step;
    ad::Var x = ad::transpose(ad::rows(words, t, 1));  // d x 1
    ad::Var pre = ad::add(ad::add(ad::matmul(w, x), ad::matmul(r, h)), b);
    ad::Var i_gate = ad::sigmoid(ad::rows(pre, 0, half));
    ad::Var f_gate = ad::sigmoid(ad::rows(pre, half, half));
    ad::Var g_cell = ad::tanh(ad::rows(pre, 2 * half, half));
    ad::Var o_gate = ad::sigmoid(ad::rows(pre, 3 * half, half));
    c = ad::add(ad::cmul(f_gate, c), ad::cmul(i_gate, g_cell));
    h = ad::cmul(o_gate, ad::tanh(c));
    if (states_out) (*states_out)[t] = h;
  }
  return h;
}

}  // namespace

EncoderParams make_encoder_params(int input_dim, int hidden, Rng& rng) {
  if (hidden < 2 || hidden % 2 != 0) {
    throw ConfigError("encoder hidden size must be even and >= 2, got " + std::to_string(hidden));
  }
  const int half = hidden / 2;
  EncoderParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  const double wi = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double wr = 1.0 / std::sqrt(static_cast<double>(half));
  p.w_fwd = gaussian_matrix(4 * half, input_dim, wi, rng);
  p.r_fwd = gaussian_matrix(4 * half, half, wr, rng);
  p.b_fwd = Eigen::MatrixXd::Zero(4 * half, 1);
  p.b_fwd.block(half, 0, half, 1).setOnes();  // forget gate bias
  p.w_bwd = gaussian_matrix(4 * half, input_dim, wi, rng);
  p.r_bwd = gaussian_matrix(4 * half, half, wr, rng);
  p.b_bwd = Eigen::MatrixXd::Zero(4 * half, 1);
  p.b_bwd.block(half, 0, half, 1).setOnes();
  return p;
}

Eigen::MatrixXd embed_tokens(const Sentence& sentence, const EmbeddingProvider& provider) {
  if (sentence.tokens.empty()) {
    throw DataError("sentence " + sentence.id + " has no tokens");
  }
  return provider.embed(sentence.tokens);
}

BoundEncoder bind_encoder(const EncoderParams& p, bool trainable) {
  auto wrap = [trainable](const Eigen::MatrixXd& m) {
    return trainable ? ad::leaf(m) : ad::constant(m);
  };
  BoundEncoder b;
  b.input_dim = p.input_dim;
  b.hidden = p.hidden;
  b.w_fwd = wrap(p.w_fwd);
  b.r_fwd = wrap(p.r_fwd);
  b.b_fwd = wrap(p.b_fwd);
  b.w_bwd = wrap(p.w_bwd);
  b.r_bwd = wrap(p.r_bwd);
  b.b_bwd = wrap(p.b_bwd);
  return b;
}

ad::Var encode_sentence_graph(const ad::Var& words, const BoundEncoder& enc,
                              std::vector<ad::Var>* context_out) {
  if (words.rows() < 1) throw DataError("cannot encode a sentence with no tokens");
  if (words.cols() != enc.input_dim) {
    throw ConfigError("encoder dimension error: word width " + std::to_string(words.cols()) +
                      " != input_dim " + std::to_string(enc.input_dim));
  }
  const int half = enc.hidden / 2;
  std::vector<ad::Var> fwd_states, bwd_states;
  ad::Var h_fwd = run_direction(words, enc.w_fwd, enc.r_fwd, enc.b_fwd, half, false,
                                context_out ? &fwd_states : nullptr);
  ad::Var h_bwd = run_direction(words, enc.w_bwd, enc.r_bwd, enc.b_bwd, half, true,
                                context_out ? &bwd_states : nullptr);
  if (context_out) {
    context_out->clear();
    for (size_t t = 0; t < fwd_states.size(); ++t) {
      context_out->push_back(ad::vconcat(fwd_states[t], bwd_states[t]));
    }
  }
  return ad::vconcat(h_fwd, h_bwd);
}

SentenceEncoding encode_sentence(const Eigen::MatrixXd& word_vectors, const EncoderParams& p) {
  BoundEncoder enc = bind_encoder(p, /*trainable=*/false);
  std::vector<ad::Var> ctx;
  ad::Var sent = encode_sentence_graph(ad::constant(word_vectors), enc, &ctx);
  SentenceEncoding out;
  out.word_vectors = word_vectors;
  out.context_outputs.resize(word_vectors.rows(), p.hidden);
  for (size_t t = 0; t < ctx.size(); ++t) {
    out.context_outputs.row(static_cast<Eigen::Index>(t)) = ctx[t].value().col(0).transpose();
  }
  out.sentence_vector = sent.value().col(0);
  return out;
}

EncodingCache::EncodingCache(const Mixture& mixture, const EmbeddingProvider& provider,
                             const EncoderParams& params) {
  auto add = [&](const Sentence& s) {
    put(s.id, encode_sentence(embed_tokens(s, provider), params));
  };
  add(mixture.query);
  for (const auto& c : mixture.candidates) add(c);
}

const SentenceEncoding& EncodingCache::at(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw DataError("encoding cache miss for sentence " + id);
  return it->second;
}

const Eigen::VectorXd& EncodingCache::mean_word(const std::string& id) const {
  auto it = means_.find(id);
  if (it == means_.end()) throw DataError("encoding cache miss for sentence " + id);
  return it->second;
}

void EncodingCache::put(const std::string& id, SentenceEncoding enc) {
  means_[id] = enc.word_vectors.colwise().mean().transpose();
  entries_[id] = std::move(enc);
}

}  // namespace scn
