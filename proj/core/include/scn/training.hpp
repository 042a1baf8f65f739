#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "scn/evalkit.hpp"
#include "scn/model.hpp"

namespace scn {

/// One teacher-forced timestep: a gold-order-consistent partial scenario
/// plus the still-unselected candidate pool. In dynamic mode a terminal
/// example (remaining_gold empty) supervises <end>.
struct TrainExample {
  size_t mixture_index = 0;
  std::vector<std::string> partial;  // ordered, query first
  std::vector<std::string> pool;     // unselected candidates, mixture order
  std::set<std::string> remaining_gold;
  bool terminal = false;
};

/// One example per timestep i = 1..n, each built from a uniformly random
/// gold subset of size i-1 arranged in gold relative order. Dynamic mode
/// appends the terminal example.
std::vector<TrainExample> sample_teacher_states(const Mixture& mixture, Rng& rng, TermMode mode);

/// 0-based insertion position that keeps gold order after inserting the
/// candidate into the partial scenario; doubles as the grid row index of
/// the correct (slot, candidate) pair.
int correct_slot(const std::map<std::string, int>& gold_order,
                 const std::vector<std::string>& partial, const std::string& candidate_id);

/// -log of the summed probability of the correct candidates.
double marginal_loss_comp(const Eigen::VectorXd& dist, const std::vector<int>& correct);

/// -log of the correct-cell mass under a softmax over all grid cells.
double marginal_loss_pairs(const Eigen::MatrixXd& grid,
                           const std::vector<std::pair<int, int>>& correct);

/// Sentence-pair supervision for the pairwise baseline head.
struct PairExample {
  std::string a, b;
  double label = 0.0;
};

std::vector<PairExample> sample_pair_examples(const Mixture& mixture, Rng& rng);

struct TrainConfig {
  int epochs = 10;
  double lr = 1e-4;
  int batch_size = 16;  // mixture-timesteps per update (gradient accumulation)
  uint64_t seed = 1;
  HeadType head = HeadType::kCompInsRn;
  TermMode mode = TermMode::kFixed;
  int embed_dim = 1024;
  int hidden = 200;
  int relation_width = 200;
  bool rn_normalize = true;
  bool pairwise_symmetric = false;
  bool resample_states = true;  // fresh teacher-forced subsets each epoch
  ProviderConfig provider;
  int jobs = 1;  // dev decoding only; the optimizer is single-threaded
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_f1 = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams params;  // best-dev snapshot (final params when no dev set)
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_dev_f1 = 0.0;
};

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(const std::vector<std::pair<std::string, Eigen::MatrixXd*>>& params,
            const std::map<std::string, Eigen::MatrixXd>& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<std::string, Eigen::MatrixXd> m_, v_;
};

/// All parameter blocks bound into one graph. leaves lists the trainable
/// blocks in ModelParams::named() order for gradient harvesting.
struct BoundModel {
  BoundEncoder encoder;
  BoundAttention attention;
  BoundInsertion insertion;
  BoundRelation relation;
  BoundPairwise pairwise;
  ad::Var end_embedding;
  std::vector<std::pair<std::string, ad::Var>> leaves;
};

BoundModel bind_model(const ModelParams& params, bool trainable);

/// Marginal log-likelihood loss of one teacher-forced example under the
/// configured head, as a 1x1 graph node.
ad::Var example_loss_graph(const Mixture& mixture, const TrainExample& ex, const BoundModel& bm,
                           const ModelConfig& config, const EmbeddingProvider& provider);

ad::Var pair_loss_graph(const Mixture& mixture, const PairExample& ex, const BoundModel& bm,
                        const EmbeddingProvider& provider);

/// Teacher-forced training with per-epoch logging. Writes one JSON line
/// per epoch to log_stream when given. Fully seeded; identical config and
/// seed reproduce the loss curve exactly.
TrainResult train(const std::vector<Mixture>& train_mixtures,
                  const std::vector<Mixture>& dev_mixtures, const TrainConfig& config,
                  const ModelParams* init = nullptr, std::ostream* log_stream = nullptr);

}  // namespace scn
