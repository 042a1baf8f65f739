#include "scn/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace scn {

namespace {

/// Count inversions by merge sort; tau needs concordant - discordant and
/// gold ranks are distinct, so inversions determine both.
size_t count_inversions(std::vector<int>& ranks, std::vector<int>& scratch, size_t lo,
                        size_t hi) {
  if (hi - lo < 2) return 0;
  size_t mid = lo + (hi - lo) / 2;
  size_t inv = count_inversions(ranks, scratch, lo, mid) + count_inversions(ranks, scratch, mid, hi);
  std::merge(ranks.begin() + lo, ranks.begin() + mid, ranks.begin() + mid, ranks.begin() + hi,
             scratch.begin() + lo);
  size_t i = lo, j = mid;
  while (i < mid && j < hi) {
    if (ranks[j] < ranks[i]) {
      inv += mid - i;
      ++j;
    } else {
      ++i;
    }
  }
  std::copy(scratch.begin() + lo, scratch.begin() + hi, ranks.begin() + lo);
  return inv;
}

std::vector<double> average_ranks(const std::vector<double>& xs) {
  const size_t n = xs.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

/// The avg/pairwise greedy loop: at each step score every remaining
/// candidate against the mean of the selected sentences' vectors.
DecodeResult greedy_mean_select(const Mixture& mixture, size_t budget,
                                const std::function<Eigen::VectorXd(const Sentence&)>& sent_vec,
                                const std::function<double(const Eigen::VectorXd&,
                                                           const Eigen::VectorXd&)>& score) {
  if (budget > mixture.candidates.size()) {
    throw DataError("baseline budget exceeds candidate pool");
  }
  std::vector<Eigen::VectorXd> cand_vecs;
  cand_vecs.reserve(mixture.candidates.size());
  for (const auto& c : mixture.candidates) cand_vecs.push_back(sent_vec(c));

  DecodeResult r;
  r.scenario_order.push_back(mixture.query.id);
  Eigen::VectorXd sum = sent_vec(mixture.query);
  std::vector<bool> taken(mixture.candidates.size(), false);
  for (size_t step = 0; step < budget; ++step) {
    Eigen::VectorXd mean = sum / static_cast<double>(r.scenario_order.size());
    int best = -1;
    double best_score = 0.0;
    for (size_t j = 0; j < cand_vecs.size(); ++j) {
      if (taken[j]) continue;
      double s = score(cand_vecs[j], mean);
      if (best < 0 || s > best_score) {
        best = static_cast<int>(j);
        best_score = s;
      }
    }
    taken[static_cast<size_t>(best)] = true;
    const std::string& id = mixture.candidates[static_cast<size_t>(best)].id;
    r.scenario_order.push_back(id);
    r.predicted_order.push_back(id);
    r.predicted_ids.insert(id);
    r.trace.push_back({id, static_cast<int>(r.scenario_order.size()), best_score});
    sum += cand_vecs[static_cast<size_t>(best)];
  }
  return r;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;  // degenerate candidates rank last
  return a.dot(b) / (na * nb);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

ClusterScore f1_score(const std::set<std::string>& predicted,
                      const std::set<std::string>& gold) {
  if (gold.empty()) throw DataError("f1_score: empty gold set");
  size_t inter = 0;
  for (const auto& id : predicted) inter += gold.count(id);
  ClusterScore s;
  s.precision = predicted.empty() ? 0.0 : static_cast<double>(inter) / predicted.size();
  s.recall = static_cast<double>(inter) / gold.size();
  s.f1 = (s.precision + s.recall) == 0.0
             ? 0.0
             : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

OrderScore kendall_tau(const std::vector<std::string>& predicted_order,
                       const std::map<std::string, int>& gold_order) {
  std::vector<int> ranks;
  for (const auto& id : predicted_order) {
    auto it = gold_order.find(id);
    if (it != gold_order.end()) ranks.push_back(it->second);
  }
  OrderScore score;
  score.n_compared = static_cast<int>(ranks.size());
  if (ranks.size() < 2) return score;
  const double pairs = static_cast<double>(ranks.size()) * (ranks.size() - 1) / 2.0;
  std::vector<int> scratch(ranks.size());
  double inv = static_cast<double>(count_inversions(ranks, scratch, 0, ranks.size()));
  score.tau = (pairs - 2.0 * inv) / pairs;
  return score;
}

double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw ConfigError("spearman_rho: length mismatch");
  if (xs.size() < 3) throw ConfigError("spearman_rho needs at least 3 points");
  for (double v : xs) {
    if (!std::isfinite(v)) throw DataError("spearman_rho: non-finite value");
  }
  for (double v : ys) {
    if (!std::isfinite(v)) throw DataError("spearman_rho: non-finite value");
  }
  std::vector<double> rx = average_ranks(xs);
  std::vector<double> ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedValueError("spearman_rho undefined for a constant vector");
  }
  return sxy / std::sqrt(sxx * syy);
}

DecodeResult baseline_unif(const Mixture& mixture, size_t budget, Rng& rng) {
  if (budget > mixture.candidates.size()) {
    throw DataError("baseline budget exceeds candidate pool");
  }
  DecodeResult r;
  r.scenario_order.push_back(mixture.query.id);
  for (size_t j : rng.sample_indices(mixture.candidates.size(), budget)) {
    const std::string& id = mixture.candidates[j].id;
    r.predicted_ids.insert(id);
    r.predicted_order.push_back(id);
    r.scenario_order.push_back(id);
    r.trace.push_back({id, static_cast<int>(r.scenario_order.size()), 0.0});
  }
  return r;
}

DecodeResult baseline_avg(const Mixture& mixture, size_t budget,
                          const EmbeddingProvider& provider) {
  auto sent_vec = [&provider](const Sentence& s) -> Eigen::VectorXd {
    return embed_tokens(s, provider).colwise().mean().transpose();
  };
  return greedy_mean_select(mixture, budget, sent_vec, cosine);
}

DecodeResult baseline_pairwise(const Mixture& mixture, size_t budget, const ModelParams& params,
                               const EmbeddingProvider& provider) {
  auto sent_vec = [&](const Sentence& s) -> Eigen::VectorXd {
    return encode_sentence(embed_tokens(s, provider), params.encoder).sentence_vector;
  };
  const bool symmetric = params.config.pairwise_symmetric;
  auto score = [&params, symmetric](const Eigen::VectorXd& cand,
                                    const Eigen::VectorXd& mean) -> double {
    double p = pairwise_prob(cand, mean, params.pairwise);
    if (!symmetric) return p;
    return 0.5 * (p + pairwise_prob(mean, cand, params.pairwise));
  };
  return greedy_mean_select(mixture, budget, sent_vec, score);
}

Report evaluate(const std::vector<Mixture>& mixtures, const DecodeFn& decode, int jobs) {
  if (mixtures.empty()) throw DataError("evaluate: no mixtures");
  Report report;
  report.per_mixture.resize(mixtures.size());
  parallel_for(mixtures.size(), jobs, [&](size_t i) {
    const Mixture& m = mixtures[i];
    DecodeResult r = decode(m);
    MixtureEval e;
    e.mixture_id = m.mixture_id;
    e.n_gold = m.gold_ids.size();
    e.n_pred = r.predicted_ids.size();
    e.cluster = f1_score(r.predicted_ids, m.gold_ids);
    e.order = kendall_tau(r.predicted_order, m.gold_order);
    report.per_mixture[i] = std::move(e);
  });

  double tau_sum = 0.0;
  std::vector<double> taus, f1s;
  for (const auto& e : report.per_mixture) {
    report.macro_precision += e.cluster.precision;
    report.macro_recall += e.cluster.recall;
    report.macro_f1 += e.cluster.f1;
    if (e.order.tau.has_value()) {
      tau_sum += *e.order.tau;
      taus.push_back(*e.order.tau);
      f1s.push_back(e.cluster.f1);
      ++report.n_tau_defined;
    }
  }
  const double n = static_cast<double>(report.per_mixture.size());
  report.macro_precision /= n;
  report.macro_recall /= n;
  report.macro_f1 /= n;
  if (report.n_tau_defined > 0) report.macro_tau = tau_sum / report.n_tau_defined;
  if (taus.size() >= 3) {
    try {
      report.rho_tau_f1 = spearman_rho(taus, f1s);
    } catch (const UndefinedValueError&) {
      // constant tau or f1 across mixtures; leave the correlation absent
    }
  }
  return report;
}

DecodeFn make_decode_fn(const std::string& head, const ModelParams* params,
                        const EmbeddingProvider& provider, TermMode mode, uint64_t seed) {
  const bool baseline = head == "unif" || head == "avg" || head == "pairwise";
  if (baseline && mode == TermMode::kDynamic) {
    throw ConfigError("head " + head + " does not model a stopping condition; use --mode fixed");
  }
  if (head == "unif") {
    return [seed](const Mixture& m) {
      Rng rng(mix_seed(seed, fnv1a64(m.mixture_id)));
      return baseline_unif(m, m.gold_ids.size(), rng);
    };
  }
  if (head == "avg") {
    return [&provider](const Mixture& m) {
      return baseline_avg(m, m.gold_ids.size(), provider);
    };
  }
  if (!params) throw ConfigError("head " + head + " requires a checkpoint");
  if (head == "pairwise") {
    return [params, &provider](const Mixture& m) {
      return baseline_pairwise(m, m.gold_ids.size(), *params, provider);
    };
  }
  if (head_from_string(head) != params->config.head) {
    throw ConfigError("checkpoint was trained for head " + to_string(params->config.head) +
                      ", not " + head);
  }
  if (mode == TermMode::kDynamic) {
    return [params, &provider](const Mixture& m) {
      return decode_dynamic(m, *params, provider);
    };
  }
  return [params, &provider](const Mixture& m) {
    return decode_fixed(m, *params, provider, m.gold_ids.size());
  };
}

void write_report(const Report& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  nlohmann::ordered_json j;
  j["macro_precision"] = report.macro_precision;
  j["macro_recall"] = report.macro_recall;
  j["macro_f1"] = report.macro_f1;
  j["macro_tau"] = report.macro_tau.has_value() ? nlohmann::ordered_json(*report.macro_tau)
                                                : nlohmann::ordered_json(nullptr);
  j["n_tau_defined"] = report.n_tau_defined;
  j["rho_tau_f1"] = report.rho_tau_f1.has_value() ? nlohmann::ordered_json(*report.rho_tau_f1)
                                                  : nlohmann::ordered_json(nullptr);
  j["n_mixtures"] = report.per_mixture.size();
  j["config"] = report.config_echo;
  j["per_mixture"] = nlohmann::ordered_json::array();
  for (const auto& e : report.per_mixture) {
    nlohmann::ordered_json r;
    r["mixture_id"] = e.mixture_id;
    r["n_gold"] = e.n_gold;
    r["n_pred"] = e.n_pred;
    r["precision"] = e.cluster.precision;
    r["recall"] = e.cluster.recall;
    r["f1"] = e.cluster.f1;
    r["tau"] = e.order.tau.has_value() ? nlohmann::ordered_json(*e.order.tau)
                                       : nlohmann::ordered_json(nullptr);
    r["n_compared"] = e.order.n_compared;
    j["per_mixture"].push_back(std::move(r));
  }
  std::ofstream jf((fs::path(out_dir) / "report.json").string(), std::ios::binary);
  if (!jf) throw ConfigError("cannot write report.json under " + out_dir);
  jf << j.dump(2) << "\n";

  std::ofstream cf((fs::path(out_dir) / "report.csv").string(), std::ios::binary);
  cf << "mixture_id,n_gold,n_pred,precision,recall,f1,tau,n_compared\n";
  for (const auto& e : report.per_mixture) {
    cf << e.mixture_id << "," << e.n_gold << "," << e.n_pred << "," << fmt(e.cluster.precision)
       << "," << fmt(e.cluster.recall) << "," << fmt(e.cluster.f1) << ","
       << (e.order.tau.has_value() ? fmt(*e.order.tau) : "") << "," << e.order.n_compared
       << "\n";
  }
}

}  // namespace scn
