#pragma once

#include <map>
#include <string>
#include <vector>

#include "scn/autodiff.hpp"
#include "scn/corpus.hpp"
#include "scn/embedding.hpp"
#include "scn/mixture.hpp"

namespace scn {

/// Bidirectional LSTM weights. Gate order within the stacked blocks is
/// input, forget, cell, output; hidden is the concatenated width h, so
/// each direction runs at h/2.
struct EncoderParams {
  int input_dim = 0;  // d
  int hidden = 0;     // h, even
  Eigen::MatrixXd w_fwd, r_fwd, b_fwd;  // (2h x d), (2h x h/2), (2h x 1)
  Eigen::MatrixXd w_bwd, r_bwd, b_bwd;
};

/// Gaussian fan-in init; forget-gate bias starts at 1.
EncoderParams make_encoder_params(int input_dim, int hidden, Rng& rng);

/// Word vectors plus the recurrent summary of one sentence.
struct SentenceEncoding {
  Eigen::MatrixXd word_vectors;     // tokens x d (provider output)
  Eigen::MatrixXd context_outputs;  // tokens x h (per-token BiLSTM states)
  Eigen::VectorXd sentence_vector;  // h (concatenated final states)
};

/// Provider lookup for a whole sentence; rows follow token order.
/// Throws DataError when the sentence has no tokens.
Eigen::MatrixXd embed_tokens(const Sentence& sentence, const EmbeddingProvider& provider);

/// Parameter handles for one graph; leaves when trainable, constants when
/// frozen. The same forward is used for training and inference.
struct BoundEncoder {
  int input_dim = 0;
  int hidden = 0;
  ad::Var w_fwd, r_fwd, b_fwd;
  ad::Var w_bwd, r_bwd, b_bwd;
};

BoundEncoder bind_encoder(const EncoderParams& p, bool trainable);

/// BiLSTM over a (tokens x d) word matrix; returns the h x 1 sentence
/// vector. When context_out is given, also collects the per-token h x 1
/// states.
ad::Var encode_sentence_graph(const ad::Var& words, const BoundEncoder& enc,
                              std::vector<ad::Var>* context_out = nullptr);

/// Value-level wrapper over the graph forward.
SentenceEncoding encode_sentence(const Eigen::MatrixXd& word_vectors, const EncoderParams& p);

/// Read-only per-mixture store: every sentence (query and candidates)
/// encoded once, keyed by sentence id.
class EncodingCache {
 public:
  EncodingCache() = default;
  EncodingCache(const Mixture& mixture, const EmbeddingProvider& provider,
                const EncoderParams& params);

  const SentenceEncoding& at(const std::string& id) const;
  /// Mean of the sentence's word vectors (d x 1).
  const Eigen::VectorXd& mean_word(const std::string& id) const;
  bool contains(const std::string& id) const { return entries_.count(id) > 0; }
  size_t size() const { return entries_.size(); }

  /// Encode and insert one extra pseudo-sentence (used for <end>).
  void put(const std::string& id, SentenceEncoding enc);

 private:
  std::map<std::string, SentenceEncoding> entries_;
  std::map<std::string, Eigen::VectorXd> means_;
};

}  // namespace scn
