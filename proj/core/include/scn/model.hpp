#pragma once

#include <string>
#include <utility>
#include <vector>

#include "scn/embedding.hpp"
#include "scn/encoder.hpp"
#include "scn/scoring.hpp"

namespace scn {

enum class HeadType { kComp, kCompIns, kCompInsRn, kPairwise };
enum class TermMode { kFixed, kDynamic };

std::string to_string(HeadType h);
HeadType head_from_string(const std::string& s);
std::string to_string(TermMode m);
TermMode term_mode_from_string(const std::string& s);

inline bool uses_insertion(HeadType h) {
  return h == HeadType::kCompIns || h == HeadType::kCompInsRn;
}
inline bool uses_relation(HeadType h) { return h == HeadType::kCompInsRn; }

struct ModelConfig {
  HeadType head = HeadType::kCompInsRn;
  TermMode mode = TermMode::kFixed;
  int embed_dim = 1024;      // d
  int hidden = 200;          // h
  int relation_width = 200;  // l
  bool rn_normalize = true;
  bool pairwise_symmetric = false;
  ProviderConfig provider;
  std::string vocab_hash = "0";
};

/// Every trainable weight of one model: encoder, head blocks, and the
/// trained <end> token embedding used by dynamic termination.
struct ModelParams {
  ModelConfig config;
  EncoderParams encoder;
  AttentionParams attention;
  InsertionParams insertion;
  RelationParams relation;
  PairwiseParams pairwise;
  Eigen::MatrixXd end_embedding;  // d x 1

  /// Head-relevant parameter blocks in a fixed order; the optimizer, the
  /// checkpoint writer and the gradient checker all iterate this.
  std::vector<std::pair<std::string, Eigen::MatrixXd*>> named();
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> named() const;
};

ModelParams init_model_params(const ModelConfig& config, uint64_t seed);

/// Single-file archive: config JSON plus named arrays. Doubles survive the
/// round trip exactly.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace scn
