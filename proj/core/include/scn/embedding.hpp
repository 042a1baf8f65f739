#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "scn/common.hpp"

namespace scn {

/// Plugin contract for word vectors: given the tokens of one sentence,
/// return a (tokens x dim) matrix. Implementations may be context
/// sensitive since they see the whole sentence at once. The same token in
/// the same sentence context must always map to the same vector.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual int dim() const = 0;

  /// One row per token. Unknown tokens map to the <unk> vector; this call
  /// does not fail on vocabulary gaps.
  virtual Eigen::MatrixXd embed(const std::vector<std::string>& tokens) const = 0;

  /// Vector for a single token.
  virtual Eigen::VectorXd lookup(const std::string& token) const = 0;

  /// Short provenance string recorded in manifests and checkpoints.
  virtual std::string provenance() const = 0;
};

/// Deterministic seeded stand-in for pretrained embeddings: every token is
/// hashed to a unit-norm gaussian vector. Dimension and seed are free, so
/// all tests run without external downloads.
class StubEmbedding final : public EmbeddingProvider {
 public:
  StubEmbedding(int dim, uint64_t seed);

  int dim() const override { return dim_; }
  Eigen::MatrixXd embed(const std::vector<std::string>& tokens) const override;
  Eigen::VectorXd lookup(const std::string& token) const override;
  std::string provenance() const override { return "stub-hash"; }

  uint64_t seed() const { return seed_; }

 private:
  int dim_;
  uint64_t seed_;
};

/// Static lookup table loaded from a whitespace-separated text file
/// ("token v1 .. vd" per line). The table must define <unk>; all unknown
/// tokens fall back to it. Stands in for pretrained contextual vectors,
/// which are an external artifact and not part of this library.
class TableEmbedding final : public EmbeddingProvider {
 public:
  explicit TableEmbedding(const std::string& path);

  int dim() const override { return dim_; }
  Eigen::MatrixXd embed(const std::vector<std::string>& tokens) const override;
  Eigen::VectorXd lookup(const std::string& token) const override;
  std::string provenance() const override { return provenance_; }

 private:
  int dim_ = 0;
  std::string provenance_;
  std::unordered_map<std::string, Eigen::VectorXd> table_;
};

/// Serializable provider description, stored in checkpoints and manifests
/// so that eval/construct can rebuild the exact provider used at training
/// time.
struct ProviderConfig {
  std::string kind = "stub";  // "stub" | "table"
  int dim = 1024;
  uint64_t seed = 1;
  std::string path;  // table file, when kind == "table"
};

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& cfg);

}  // namespace scn
