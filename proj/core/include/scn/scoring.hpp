#pragma once

#include <string>
#include <vector>

#include "scn/autodiff.hpp"

namespace scn {

/// Bilinear sentence-to-scenario attention with a scalar output layer.
struct AttentionParams {
  Eigen::MatrixXd u;      // h x h
  Eigen::MatrixXd out_w;  // h x 1
  Eigen::MatrixXd out_b;  // 1 x 1
};

/// Bilinear map scoring an insertion-point vector against [context; candidate].
struct InsertionParams {
  Eigen::MatrixXd w;  // h x 2h
};

/// Order-3 word-pair contraction, stored as l stacked d x d blocks, plus
/// the scalar output layer over the l-wide relation vector.
struct RelationParams {
  int width = 0;          // l
  Eigen::MatrixXd v;      // (l*d) x d; block m occupies rows [m*d, (m+1)*d)
  Eigen::MatrixXd out_w;  // l x 1
  Eigen::MatrixXd out_b;  // 1 x 1
  /// Normalize word-pair sums by |candidate tokens| * |scenario tokens| so
  /// relation scores do not grow with sentence length.
  bool normalize = true;
};

/// Feedforward same-scenario classifier over [a; b; a*b].
struct PairwiseParams {
  Eigen::MatrixXd w1;  // h x 3h
  Eigen::MatrixXd b1;  // h x 1
  Eigen::MatrixXd w2;  // h x 1
  Eigen::MatrixXd b2;  // 1 x 1
};

/// Insertion-point x candidate scores. z and fused always have exactly
/// |scenario|+1 rows; fused == z when no relation term applies.
struct ScoreGrid {
  Eigen::MatrixXd z;
  Eigen::VectorXd r;
  Eigen::MatrixXd fused;
};

struct CompScores {
  Eigen::MatrixXd alpha;  // candidates x scenario sentences
  Eigen::VectorXd logits;
  Eigen::VectorXd dist;  // softmax over candidates
};

struct InsertionScores {
  ScoreGrid grid;
  Eigen::VectorXd scores;       // per-candidate max over slots
  std::vector<int> best_slots;  // 0-based slot index per candidate
};

// -- Graph layer -------------------------------------------------------------
// One forward implementation serves training, decoding and the value-level
// API below; the value functions simply read this graph off.

struct BoundAttention {
  ad::Var u, out_w, out_b;
};
struct BoundInsertion {
  ad::Var w;
};
struct BoundRelation {
  ad::Var v, out_w, out_b;
  int width = 0;
  bool normalize = true;
};
struct BoundPairwise {
  ad::Var w1, b1, w2, b2;
};

BoundAttention bind_attention(const AttentionParams& p, bool trainable);
BoundInsertion bind_insertion(const InsertionParams& p, bool trainable);
BoundRelation bind_relation(const RelationParams& p, bool trainable);
BoundPairwise bind_pairwise(const PairwiseParams& p, bool trainable);

struct CompGraph {
  ad::Var alpha;     // J x K attention weights
  ad::Var contexts;  // J x h attention-pooled scenario vectors
  ad::Var logits;    // J x 1
};

/// Attention of each candidate over the scenario sentences, pooled and
/// scored. t_vecs/c_vecs are h x 1 sentence vectors.
CompGraph comp_graph(const std::vector<ad::Var>& t_vecs, const std::vector<ad::Var>& c_vecs,
                     const BoundAttention& att);

/// |T|+1 insertion-point vectors: t_1, pairwise interior averages, t_|T|.
std::vector<ad::Var> insertion_point_graph(const std::vector<ad::Var>& t_vecs);

/// The (|T|+1) x J grid of bilinear insertion scores.
ad::Var insertion_grid_graph(const std::vector<ad::Var>& t_vecs,
                             const std::vector<ad::Var>& c_vecs, const CompGraph& comp,
                             const BoundInsertion& ins);

/// Sum (or mean) of a sentence's word vectors: the sufficient statistic of
/// the word-pair contraction, since the bilinear form distributes over the
/// double sum.
ad::Var word_aggregate(const ad::Var& words, bool mean);

/// J x 1 relation scores from per-sentence word aggregates.
ad::Var relation_graph(const std::vector<ad::Var>& t_aggs, const std::vector<ad::Var>& c_aggs,
                       const BoundRelation& rel);

/// z with r broadcast over slots.
ad::Var fuse_grid(const ad::Var& z, const ad::Var& r);

ad::Var pairwise_logit_graph(const ad::Var& a, const ad::Var& b, const BoundPairwise& pw);

// -- Value layer --------------------------------------------------------------

CompScores comp_scores(const std::vector<Eigen::VectorXd>& scenario_vecs,
                       const std::vector<Eigen::VectorXd>& candidate_vecs,
                       const AttentionParams& att);

std::vector<Eigen::VectorXd> insertion_points(const std::vector<Eigen::VectorXd>& scenario_vecs);

InsertionScores comp_ins_scores(const std::vector<Eigen::VectorXd>& scenario_vecs,
                                const std::vector<Eigen::VectorXd>& candidate_vecs,
                                const AttentionParams& att, const InsertionParams& ins);

/// Word-pair relation summary per candidate. Inputs are (tokens x d) word
/// matrices.
Eigen::VectorXd relation_scores(const std::vector<Eigen::MatrixXd>& scenario_words,
                                const std::vector<Eigen::MatrixXd>& candidate_words,
                                const RelationParams& rel);

InsertionScores comp_ins_rn_scores(const std::vector<Eigen::VectorXd>& scenario_vecs,
                                   const std::vector<Eigen::VectorXd>& candidate_vecs,
                                   const std::vector<Eigen::MatrixXd>& scenario_words,
                                   const std::vector<Eigen::MatrixXd>& candidate_words,
                                   const AttentionParams& att, const InsertionParams& ins,
                                   const RelationParams& rel);

double pairwise_prob(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                     const PairwiseParams& pw);

/// Lowest index wins ties.
int argmax_index(const Eigen::VectorXd& scores);

}  // namespace scn
