#include "scn/scoring.hpp"

namespace scn {

namespace {

std::vector<ad::Var> to_constants(const std::vector<Eigen::VectorXd>& vecs) {
  std::vector<ad::Var> out;
  out.reserve(vecs.size());
  for (const auto& v : vecs) out.push_back(ad::constant(v));
  return out;
}

void check_nonempty(const std::vector<ad::Var>& t, const std::vector<ad::Var>& c) {
  if (t.empty()) throw DataError("scoring requires a non-empty scenario");
  if (c.empty()) throw DataError("scoring requires a non-empty candidate set");
}

InsertionScores grid_to_scores(ScoreGrid grid) {
  const Eigen::MatrixXd& cells = grid.fused;
  InsertionScores out;
  out.scores.resize(cells.cols());
  out.best_slots.resize(cells.cols());
  for (Eigen::Index j = 0; j < cells.cols(); ++j) {
    int best = 0;
    for (Eigen::Index k = 1; k < cells.rows(); ++k) {
      if (cells(k, j) > cells(best, j)) best = static_cast<int>(k);
    }
    out.best_slots[static_cast<size_t>(j)] = best;
    out.scores(j) = cells(best, j);
  }
  out.grid = std::move(grid);
  return out;
}

}  // namespace

BoundAttention bind_attention(const AttentionParams& p, bool trainable) {
  auto wrap = [trainable](const Eigen::MatrixXd& m) {
    return trainable ? ad::leaf(m) : ad::constant(m);
  };
  return {wrap(p.u), wrap(p.out_w), wrap(p.out_b)};
}

BoundInsertion bind_insertion(const InsertionParams& p, bool trainable) {
  return {trainable ? ad::leaf(p.w) : ad::constant(p.w)};
}

BoundRelation bind_relation(const RelationParams& p, bool trainable) {
  auto wrap = [trainable](const Eigen::MatrixXd& m) {
    return trainable ? ad::leaf(m) : ad::constant(m);
  };
  return {wrap(p.v), wrap(p.out_w), wrap(p.out_b), p.width, p.normalize};
}

BoundPairwise bind_pairwise(const PairwiseParams& p, bool trainable) {
  auto wrap = [trainable](const Eigen::MatrixXd& m) {
    return trainable ? ad::leaf(m) : ad::constant(m);
  };
  return {wrap(p.w1), wrap(p.b1), wrap(p.w2), wrap(p.b2)};
}

CompGraph comp_graph(const std::vector<ad::Var>& t_vecs, const std::vector<ad::Var>& c_vecs,
                     const BoundAttention& att) {
  check_nonempty(t_vecs, c_vecs);
  ad::Var t_cols = ad::stack_cols(t_vecs);  // h x K
  ad::Var c_cols = ad::stack_cols(c_vecs);  // h x J
  if (t_cols.rows() != att.u.rows()) {
    throw ConfigError("attention dimension error: sentence width " +
                      std::to_string(t_cols.rows()) + " != U rows " +
                      std::to_string(att.u.rows()));
  }
  CompGraph g;
  // logits_{j,k} = c_j^T U t_k, softmax over k.
  ad::Var raw = ad::matmul(ad::transpose(c_cols), ad::matmul(att.u, t_cols));  // J x K
  g.alpha = ad::row_softmax(raw);
  g.contexts = ad::matmul(g.alpha, ad::transpose(t_cols));  // J x h
  g.logits = ad::add_scalar(ad::matmul(g.contexts, att.out_w), att.out_b);  // J x 1
  return g;
}

std::vector<ad::Var> insertion_point_graph(const std::vector<ad::Var>& t_vecs) {
  if (t_vecs.empty()) throw DataError("insertion points need a non-empty scenario");
  const size_t k = t_vecs.size();
  std::vector<ad::Var> m;
  m.reserve(k + 1);
  m.push_back(t_vecs.front());
  for (size_t i = 1; i < k; ++i) {
    m.push_back(ad::scale(ad::add(t_vecs[i - 1], t_vecs[i]), 0.5));
  }
  m.push_back(t_vecs.back());
  return m;
}

ad::Var insertion_grid_graph(const std::vector<ad::Var>& t_vecs,
                             const std::vector<ad::Var>& c_vecs, const CompGraph& comp,
                             const BoundInsertion& ins) {
  check_nonempty(t_vecs, c_vecs);
  std::vector<ad::Var> m_vecs = insertion_point_graph(t_vecs);
  ad::Var m_rows = ad::transpose(ad::stack_cols(m_vecs));  // (K+1) x h
  std::vector<ad::Var> u_cols;
  u_cols.reserve(c_vecs.size());
  for (size_t j = 0; j < c_vecs.size(); ++j) {
    ad::Var a_j = ad::transpose(ad::rows(comp.contexts, static_cast<Eigen::Index>(j), 1));
    u_cols.push_back(ad::matmul(ins.w, ad::vconcat(a_j, c_vecs[j])));  // h x 1
  }
  return ad::matmul(m_rows, ad::stack_cols(u_cols));  // (K+1) x J
}

ad::Var word_aggregate(const ad::Var& words, bool mean) {
  const Eigen::Index n = words.rows();
  Eigen::MatrixXd ones = Eigen::MatrixXd::Constant(n, 1, mean ? 1.0 / n : 1.0);
  return ad::matmul(ad::transpose(words), ad::constant(ones));  // d x 1
}

ad::Var relation_graph(const std::vector<ad::Var>& t_aggs, const std::vector<ad::Var>& c_aggs,
                       const BoundRelation& rel) {
  check_nonempty(t_aggs, c_aggs);
  const Eigen::Index d = t_aggs.front().rows();
  if (rel.v.rows() != static_cast<Eigen::Index>(rel.width) * d || rel.v.cols() != d) {
    throw ConfigError("relation dimension error: V is " + std::to_string(rel.v.rows()) + "x" +
                      std::to_string(rel.v.cols()) + " but expected " +
                      std::to_string(rel.width * d) + "x" + std::to_string(d));
  }
  // averaging over scenario sentences commutes with the bilinear form, so
  // contract once against the mean scenario aggregate.
  ad::Var g = t_aggs.front();
  for (size_t i = 1; i < t_aggs.size(); ++i) g = ad::add(g, t_aggs[i]);
  g = ad::scale(g, 1.0 / static_cast<double>(t_aggs.size()));

  ad::Var vg = ad::reshape(ad::matmul(rel.v, g), d, rel.width);        // d x l
  ad::Var p = ad::matmul(ad::transpose(ad::stack_cols(c_aggs)), vg);   // J x l
  return ad::add_scalar(ad::matmul(p, rel.out_w), rel.out_b);          // J x 1
}

ad::Var fuse_grid(const ad::Var& z, const ad::Var& r) {
  if (z.cols() != r.rows() || r.cols() != 1) {
    throw ConfigError("fuse_grid: r must be a column vector matching grid columns");
  }
  ad::Var ones = ad::constant(Eigen::MatrixXd::Ones(z.rows(), 1));
  return ad::add(z, ad::matmul(ones, ad::transpose(r)));
}

ad::Var pairwise_logit_graph(const ad::Var& a, const ad::Var& b, const BoundPairwise& pw) {
  if (a.rows() != b.rows()) throw ConfigError("pairwise dimension error: encodings differ");
  ad::Var feats = ad::vconcat(ad::vconcat(a, b), ad::cmul(a, b));  // 3h x 1
  ad::Var hidden = ad::tanh(ad::add(ad::matmul(pw.w1, feats), pw.b1));
  return ad::add(ad::matmul(ad::transpose(pw.w2), hidden), pw.b2);  // 1 x 1
}

CompScores comp_scores(const std::vector<Eigen::VectorXd>& scenario_vecs,
                       const std::vector<Eigen::VectorXd>& candidate_vecs,
                       const AttentionParams& att) {
  BoundAttention batt = bind_attention(att, false);
  CompGraph g = comp_graph(to_constants(scenario_vecs), to_constants(candidate_vecs), batt);
  CompScores out;
  out.alpha = g.alpha.value();
  out.logits = g.logits.value().col(0);
  out.dist = ad::softmax(g.logits).value().col(0);
  return out;
}

std::vector<Eigen::VectorXd> insertion_points(const std::vector<Eigen::VectorXd>& scenario_vecs) {
  std::vector<ad::Var> m = insertion_point_graph(to_constants(scenario_vecs));
  std::vector<Eigen::VectorXd> out;
  out.reserve(m.size());
  for (const auto& v : m) out.push_back(v.value().col(0));
  return out;
}

InsertionScores comp_ins_scores(const std::vector<Eigen::VectorXd>& scenario_vecs,
                                const std::vector<Eigen::VectorXd>& candidate_vecs,
                                const AttentionParams& att, const InsertionParams& ins) {
  BoundAttention batt = bind_attention(att, false);
  BoundInsertion bins = bind_insertion(ins, false);
  auto t_vars = to_constants(scenario_vecs);
  auto c_vars = to_constants(candidate_vecs);
  CompGraph g = comp_graph(t_vars, c_vars, batt);
  ad::Var z = insertion_grid_graph(t_vars, c_vars, g, bins);
  ScoreGrid grid;
  grid.z = z.value();
  grid.r = Eigen::VectorXd::Zero(grid.z.cols());
  grid.fused = grid.z;
  return grid_to_scores(std::move(grid));
}

Eigen::VectorXd relation_scores(const std::vector<Eigen::MatrixXd>& scenario_words,
                                const std::vector<Eigen::MatrixXd>& candidate_words,
                                const RelationParams& rel) {
  for (const auto& w : scenario_words) {
    if (w.rows() == 0) throw DataError("relation scores: scenario sentence with no words");
  }
  for (const auto& w : candidate_words) {
    if (w.rows() == 0) throw DataError("relation scores: candidate sentence with no words");
  }
  BoundRelation brel = bind_relation(rel, false);
  std::vector<ad::Var> t_aggs, c_aggs;
  for (const auto& w : scenario_words) {
    t_aggs.push_back(word_aggregate(ad::constant(w), rel.normalize));
  }
  for (const auto& w : candidate_words) {
    c_aggs.push_back(word_aggregate(ad::constant(w), rel.normalize));
  }
  return relation_graph(t_aggs, c_aggs, brel).value().col(0);
}

InsertionScores comp_ins_rn_scores(const std::vector<Eigen::VectorXd>& scenario_vecs,
                                   const std::vector<Eigen::VectorXd>& candidate_vecs,
                                   const std::vector<Eigen::MatrixXd>& scenario_words,
                                   const std::vector<Eigen::MatrixXd>& candidate_words,
                                   const AttentionParams& att, const InsertionParams& ins,
                                   const RelationParams& rel) {
  InsertionScores base = comp_ins_scores(scenario_vecs, candidate_vecs, att, ins);
  Eigen::VectorXd r = relation_scores(scenario_words, candidate_words, rel);
  ScoreGrid grid;
  grid.z = std::move(base.grid.z);
  grid.fused = grid.z + Eigen::VectorXd::Ones(grid.z.rows()) * r.transpose();
  grid.r = std::move(r);
  return grid_to_scores(std::move(grid));
}

double pairwise_prob(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                     const PairwiseParams& pw) {
  BoundPairwise bpw = bind_pairwise(pw, false);
  ad::Var logit = pairwise_logit_graph(ad::constant(a), ad::constant(b), bpw);
  return ad::sigmoid(logit).scalar();
}

int argmax_index(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) throw DataError("argmax over empty score vector");
  int best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores(i) > scores(best)) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace scn
