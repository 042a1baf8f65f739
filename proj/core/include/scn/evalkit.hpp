#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scn/decoder.hpp"

namespace scn {

struct ClusterScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct OrderScore {
  std::optional<double> tau;  // absent when fewer than 2 gold picks
  int n_compared = 0;
};

/// Set overlap against gold. Empty prediction scores precision 0.
ClusterScore f1_score(const std::set<std::string>& predicted,
                      const std::set<std::string>& gold);

/// Kendall's tau over the correctly extracted candidates; predictions
/// without a gold rank are dropped first.
OrderScore kendall_tau(const std::vector<std::string>& predicted_order,
                       const std::map<std::string, int>& gold_order);

/// Rank correlation with average ranks for ties. Needs >= 3 points;
/// throws UndefinedValueError when either side is constant.
double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys);

/// Uniform random selection of `budget` candidates.
DecodeResult baseline_unif(const Mixture& mixture, size_t budget, Rng& rng);

/// Iteratively append the candidate whose mean word vector is cosine
/// closest to the mean embedding of the scenario-in-construction.
DecodeResult baseline_avg(const Mixture& mixture, size_t budget,
                          const EmbeddingProvider& provider);

/// Same loop as baseline_avg with the trained pairwise probability in
/// place of cosine, over BiLSTM sentence encodings.
DecodeResult baseline_pairwise(const Mixture& mixture, size_t budget, const ModelParams& params,
                               const EmbeddingProvider& provider);

struct MixtureEval {
  std::string mixture_id;
  size_t n_gold = 0;
  size_t n_pred = 0;
  ClusterScore cluster;
  OrderScore order;
};

struct Report {
  std::vector<MixtureEval> per_mixture;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> macro_tau;  // over mixtures with defined tau
  int n_tau_defined = 0;
  std::optional<double> rho_tau_f1;
  std::map<std::string, std::string> config_echo;
};

using DecodeFn = std::function<DecodeResult(const Mixture&)>;

/// Decode every mixture and aggregate macro scores plus the sorting /
/// clustering correlation. Parallel over mixtures; aggregation is
/// order independent.
Report evaluate(const std::vector<Mixture>& mixtures, const DecodeFn& decode, int jobs = 1);

/// Build the decode function for an eval head. `head` is one of unif,
/// avg, pairwise, comp, comp-ins, comp-ins-rn; trainable heads need
/// params. Baselines only support fixed budgets (gold size per mixture).
DecodeFn make_decode_fn(const std::string& head, const ModelParams* params,
                        const EmbeddingProvider& provider, TermMode mode, uint64_t seed);

/// report.json plus report.csv (one row per mixture).
void write_report(const Report& report, const std::string& out_dir);

}  // namespace scn
