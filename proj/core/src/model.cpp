#include "scn/model.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace scn {

namespace {

using ordered_json = nlohmann::ordered_json;

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = stddev * rng.gaussian();
  }
  return m;
}

template <typename Params, typename Matrix>
std::vector<std::pair<std::string, Matrix*>> collect_named(Params& p) {
  std::vector<std::pair<std::string, Matrix*>> out;
  auto push = [&out](const char* name, Matrix& m) { out.emplace_back(name, &m); };

  push("encoder.w_fwd", p.encoder.w_fwd);
  push("encoder.r_fwd", p.encoder.r_fwd);
  push("encoder.b_fwd", p.encoder.b_fwd);
  push("encoder.w_bwd", p.encoder.w_bwd);
  push("encoder.r_bwd", p.encoder.r_bwd);
  push("encoder.b_bwd", p.encoder.b_bwd);

  if (p.config.head == HeadType::kPairwise) {
    push("pairwise.w1", p.pairwise.w1);
    push("pairwise.b1", p.pairwise.b1);
    push("pairwise.w2", p.pairwise.w2);
    push("pairwise.b2", p.pairwise.b2);
    return out;
  }

  push("attention.u", p.attention.u);
  push("attention.out_w", p.attention.out_w);
  push("attention.out_b", p.attention.out_b);
  if (uses_insertion(p.config.head)) {
    push("insertion.w", p.insertion.w);
  }
  if (uses_relation(p.config.head)) {
    push("relation.v", p.relation.v);
    push("relation.out_w", p.relation.out_w);
    push("relation.out_b", p.relation.out_b);
  }
  if (p.config.mode == TermMode::kDynamic) {
    push("end_embedding", p.end_embedding);
  }
  return out;
}

ordered_json config_to_json(const ModelConfig& c) {
  ordered_json j;
  j["head"] = to_string(c.head);
  j["mode"] = to_string(c.mode);
  j["embed_dim"] = c.embed_dim;
  j["hidden"] = c.hidden;
  j["relation_width"] = c.relation_width;
  j["rn_normalize"] = c.rn_normalize;
  j["pairwise_symmetric"] = c.pairwise_symmetric;
  j["provider"] = ordered_json{{"kind", c.provider.kind},
                               {"dim", c.provider.dim},
                               {"seed", c.provider.seed},
                               {"path", c.provider.path}};
  j["vocab_hash"] = c.vocab_hash;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.head = head_from_string(j.at("head").get<std::string>());
  c.mode = term_mode_from_string(j.at("mode").get<std::string>());
  c.embed_dim = j.at("embed_dim").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.relation_width = j.at("relation_width").get<int>();
  c.rn_normalize = j.at("rn_normalize").get<bool>();
  c.pairwise_symmetric = j.at("pairwise_symmetric").get<bool>();
  const auto& p = j.at("provider");
  c.provider.kind = p.at("kind").get<std::string>();
  c.provider.dim = p.at("dim").get<int>();
  c.provider.seed = p.at("seed").get<uint64_t>();
  c.provider.path = p.at("path").get<std::string>();
  c.vocab_hash = j.at("vocab_hash").get<std::string>();
  return c;
}

}  // namespace

std::string to_string(HeadType h) {
  switch (h) {
    case HeadType::kComp: return "comp";
    case HeadType::kCompIns: return "comp-ins";
    case HeadType::kCompInsRn: return "comp-ins-rn";
    case HeadType::kPairwise: return "pairwise";
  }
  return "?";
}

HeadType head_from_string(const std::string& s) {
  if (s == "comp") return HeadType::kComp;
  if (s == "comp-ins") return HeadType::kCompIns;
  if (s == "comp-ins-rn") return HeadType::kCompInsRn;
  if (s == "pairwise") return HeadType::kPairwise;
  throw ConfigError("unknown head: " + s);
}

std::string to_string(TermMode m) {
  return m == TermMode::kFixed ? "fixed" : "dynamic";
}

TermMode term_mode_from_string(const std::string& s) {
  if (s == "fixed") return TermMode::kFixed;
  if (s == "dynamic") return TermMode::kDynamic;
  throw ConfigError("unknown termination mode: " + s);
}

std::vector<std::pair<std::string, Eigen::MatrixXd*>> ModelParams::named() {
  return collect_named<ModelParams, Eigen::MatrixXd>(*this);
}

std::vector<std::pair<std::string, const Eigen::MatrixXd*>> ModelParams::named() const {
  return collect_named<const ModelParams, const Eigen::MatrixXd>(*this);
}

ModelParams init_model_params(const ModelConfig& config, uint64_t seed) {
  if (config.embed_dim != config.provider.dim) {
    throw ConfigError("model embed_dim " + std::to_string(config.embed_dim) +
                      " does not match provider dim " + std::to_string(config.provider.dim));
  }
  Rng rng(splitmix64(seed ^ 0x9d2c5680u));
  const int d = config.embed_dim;
  const int h = config.hidden;
  const int l = config.relation_width;

  // Only head-relevant blocks get storage; at the default widths the
  // relation tensor alone is l*d*d doubles.
  ModelParams p;
  p.config = config;
  p.encoder = make_encoder_params(d, h, rng);
  p.relation.width = l;
  p.relation.normalize = config.rn_normalize;

  if (config.head != HeadType::kPairwise) {
    p.attention.u = gaussian_matrix(h, h, 1.0 / std::sqrt(static_cast<double>(h)), rng);
    p.attention.out_w = gaussian_matrix(h, 1, 1.0 / std::sqrt(static_cast<double>(h)), rng);
    p.attention.out_b = Eigen::MatrixXd::Zero(1, 1);
  }
  if (uses_insertion(config.head)) {
    p.insertion.w = gaussian_matrix(h, 2 * h, 1.0 / std::sqrt(2.0 * h), rng);
  }
  if (uses_relation(config.head)) {
    p.relation.v = gaussian_matrix(static_cast<Eigen::Index>(l) * d, d,
                                   1.0 / std::sqrt(static_cast<double>(d)), rng);
    p.relation.out_w = gaussian_matrix(l, 1, 1.0 / std::sqrt(static_cast<double>(l)), rng);
    p.relation.out_b = Eigen::MatrixXd::Zero(1, 1);
  }
  if (config.head == HeadType::kPairwise) {
    p.pairwise.w1 = gaussian_matrix(h, 3 * h, 1.0 / std::sqrt(3.0 * h), rng);
    p.pairwise.b1 = Eigen::MatrixXd::Zero(h, 1);
    p.pairwise.w2 = gaussian_matrix(h, 1, 1.0 / std::sqrt(static_cast<double>(h)), rng);
    p.pairwise.b2 = Eigen::MatrixXd::Zero(1, 1);
  }
  if (config.mode == TermMode::kDynamic && config.head != HeadType::kPairwise) {
    p.end_embedding = gaussian_matrix(d, 1, 1.0, rng);
    double n = p.end_embedding.norm();
    if (n > 0) p.end_embedding /= n;
  }
  return p;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
  ordered_json j;
  j["format"] = "scenario-checkpoint-v1";
  j["version"] = kVersion;
  j["config"] = config_to_json(params.config);
  ordered_json arrays;
  for (const auto& [name, mat] : params.named()) {
    ordered_json a;
    a["rows"] = mat->rows();
    a["cols"] = mat->cols();
    std::vector<double> data(mat->data(), mat->data() + mat->size());
    a["data"] = data;
    arrays[name] = std::move(a);
  }
  j["arrays"] = std::move(arrays);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint: " + path);
  out << j.dump() << "\n";
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("checkpoint not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint parse error: ") + e.what());
  }
  if (j.value("format", "") != "scenario-checkpoint-v1") {
    throw DataError("unrecognized checkpoint format in " + path);
  }
  ModelConfig config = config_from_json(j.at("config"));
  ModelParams p = init_model_params(config, 0);
  const auto& arrays = j.at("arrays");
  for (auto& [name, mat] : p.named()) {
    if (!arrays.contains(name)) {
      throw DataError("checkpoint missing array " + name);
    }
    const auto& a = arrays.at(name);
    Eigen::Index rows = a.at("rows").get<Eigen::Index>();
    Eigen::Index cols = a.at("cols").get<Eigen::Index>();
    if (rows != mat->rows() || cols != mat->cols()) {
      throw DataError("checkpoint array " + name + " has shape " + std::to_string(rows) + "x" +
                      std::to_string(cols) + ", expected " + std::to_string(mat->rows()) + "x" +
                      std::to_string(mat->cols()));
    }
    std::vector<double> data = a.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != mat->size()) {
      throw DataError("checkpoint array " + name + " has wrong element count");
    }
    *mat = Eigen::Map<Eigen::MatrixXd>(data.data(), rows, cols);
  }
  return p;
}

}  // namespace scn
