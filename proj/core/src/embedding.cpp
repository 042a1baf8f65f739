#include "scn/embedding.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

namespace scn {

StubEmbedding::StubEmbedding(int dim, uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 1) throw ConfigError("embedding dim must be >= 1");
}

Eigen::VectorXd StubEmbedding::lookup(const std::string& token) const {
  Rng rng(splitmix64(fnv1a64(token) ^ seed_));
  Eigen::VectorXd v(dim_);
  for (int i = 0; i < dim_; ++i) v(i) = rng.gaussian();
  double n = v.norm();
  if (n == 0.0) v(0) = 1.0; else v /= n;
  return v;
}

Eigen::MatrixXd StubEmbedding::embed(const std::vector<std::string>& tokens) const {
  Eigen::MatrixXd m(tokens.size(), dim_);
  for (size_t i = 0; i < tokens.size(); ++i) m.row(i) = lookup(tokens[i]).transpose();
  return m;
}

TableEmbedding::TableEmbedding(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("embedding table not found: " + path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string token;
    iss >> token;
    std::vector<double> vals;
    double x;
    while (iss >> x) vals.push_back(x);
    if (vals.empty()) {
      throw DataError("embedding table line " + std::to_string(line_no) + ": no values");
    }
    if (dim_ == 0) dim_ = static_cast<int>(vals.size());
    if (static_cast<int>(vals.size()) != dim_) {
      throw DataError("embedding table line " + std::to_string(line_no) +
                      ": inconsistent dimension");
    }
    Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(vals.data(), dim_);
    table_.emplace(std::move(token), std::move(v));
  }
  if (!table_.count(kUnkToken)) {
    throw ConfigError("embedding table must define " + std::string(kUnkToken));
  }
  provenance_ = "pretrained-contextual:" + hash_file_hex(path);
}

Eigen::VectorXd TableEmbedding::lookup(const std::string& token) const {
  auto it = table_.find(token);
  if (it == table_.end()) it = table_.find(kUnkToken);
  return it->second;
}

Eigen::MatrixXd TableEmbedding::embed(const std::vector<std::string>& tokens) const {
  Eigen::MatrixXd m(tokens.size(), dim_);
  for (size_t i = 0; i < tokens.size(); ++i) m.row(i) = lookup(tokens[i]).transpose();
  return m;
}

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& cfg) {
  if (cfg.kind == "stub") return std::make_unique<StubEmbedding>(cfg.dim, cfg.seed);
  if (cfg.kind == "table") return std::make_unique<TableEmbedding>(cfg.path);
  throw ConfigError("unknown embedding provider kind: " + cfg.kind);
}

}  // namespace scn
