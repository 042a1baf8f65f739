#include "scn/decoder.hpp"

#include <algorithm>
#include <unordered_map>

#include "json.hpp"

namespace scn {

namespace {

/// Greedy selection loop shared by both termination modes.
class DecodeLoop {
 public:
  DecodeLoop(const Mixture& mixture, const ModelParams& params,
             const EmbeddingProvider& provider, bool with_end)
      : params_(params), with_end_(with_end), cache_(mixture, provider, params.encoder) {
    if (params.config.head == HeadType::kPairwise) {
      throw ConfigError(
          "pairwise checkpoints have no selection head; evaluate them as a baseline");
    }
    if (provider.dim() != params.config.embed_dim) {
      throw ConfigError("provider dim " + std::to_string(provider.dim()) +
                        " does not match checkpoint embed_dim " +
                        std::to_string(params.config.embed_dim));
    }
    selected_.push_back(mixture.query.id);
    for (const auto& c : mixture.candidates) {
      if (c.id == kEndToken) {
        throw DataError("candidate id collides with the reserved token " +
                        std::string(kEndToken));
      }
      pool_.push_back(c.id);
    }
    if (with_end_) {
      // <end> runs through the same path as a one-token sentence whose
      // only word vector is the trained end embedding.
      SentenceEncoding enc =
          encode_sentence(params.end_embedding.transpose(), params.encoder);
      cache_.put(kEndToken, std::move(enc));
    }
  }

  /// One greedy step. Returns false when <end> wins (nothing selected).
  bool step(std::vector<TraceStep>& trace) {
    std::vector<std::string> cands = pool_;
    if (with_end_) cands.push_back(kEndToken);

    std::vector<Eigen::VectorXd> t_vecs, c_vecs;
    for (const auto& id : selected_) t_vecs.push_back(cache_.at(id).sentence_vector);
    for (const auto& id : cands) c_vecs.push_back(cache_.at(id).sentence_vector);

    Eigen::VectorXd scores;
    std::vector<int> slots(cands.size(), static_cast<int>(t_vecs.size()));  // append slot
    const HeadType head = params_.config.head;
    if (head == HeadType::kComp) {
      CompScores cs = comp_scores(t_vecs, c_vecs, params_.attention);
      scores = cs.dist;
    } else {
      InsertionScores is;
      if (head == HeadType::kCompIns) {
        is = comp_ins_scores(t_vecs, c_vecs, params_.attention, params_.insertion);
      } else {
        std::vector<Eigen::MatrixXd> t_words, c_words;
        for (const auto& id : selected_) t_words.push_back(cache_.at(id).word_vectors);
        for (const auto& id : cands) c_words.push_back(cache_.at(id).word_vectors);
        is = comp_ins_rn_scores(t_vecs, c_vecs, t_words, c_words, params_.attention,
                                params_.insertion, params_.relation);
      }
      scores = is.scores;
      slots = is.best_slots;
      if (with_end_) {
        // <end> is scored at the terminal append slot only; placing it
        // elsewhere has no meaning.
        Eigen::Index end_col = static_cast<Eigen::Index>(cands.size()) - 1;
        scores(end_col) = is.grid.fused(is.grid.fused.rows() - 1, end_col);
        slots.back() = static_cast<int>(is.grid.fused.rows()) - 1;
      }
    }

    int best = argmax_index(scores);
    if (with_end_ && cands[static_cast<size_t>(best)] == kEndToken) return false;

    const std::string& id = cands[static_cast<size_t>(best)];
    int slot = head == HeadType::kComp ? static_cast<int>(selected_.size()) : slots[best];
    selected_.insert(selected_.begin() + slot, id);
    pool_.erase(std::find(pool_.begin(), pool_.end(), id));
    trace.push_back({id, slot + 1, scores(best)});
    return true;
  }

  size_t pool_size() const { return pool_.size(); }
  const std::vector<std::string>& selected() const { return selected_; }

 private:
  const ModelParams& params_;
  bool with_end_;
  EncodingCache cache_;
  std::vector<std::string> selected_;
  std::vector<std::string> pool_;  // mixture order; argmax ties pick the earliest
};

DecodeResult finish_result(const Mixture& mixture, const DecodeLoop& loop,
                           std::vector<TraceStep> trace, Termination termination) {
  DecodeResult r;
  r.termination = termination;
  r.trace = std::move(trace);
  r.scenario_order = loop.selected();
  for (const auto& step : r.trace) r.predicted_ids.insert(step.chosen);
  for (const auto& id : r.scenario_order) {
    if (id != mixture.query.id) r.predicted_order.push_back(id);
  }
  return r;
}

}  // namespace

std::string to_string(Termination t) {
  return t == Termination::kFixedBudget ? "fixed-budget" : "end-token";
}

DecodeResult decode_fixed(const Mixture& mixture, const ModelParams& params,
                          const EmbeddingProvider& provider, size_t budget) {
  if (budget > mixture.candidates.size()) {
    throw DataError("decode budget " + std::to_string(budget) + " exceeds candidate pool (" +
                    std::to_string(mixture.candidates.size()) + ")");
  }
  DecodeLoop loop(mixture, params, provider, /*with_end=*/false);
  std::vector<TraceStep> trace;
  for (size_t i = 0; i < budget; ++i) loop.step(trace);
  return finish_result(mixture, loop, std::move(trace), Termination::kFixedBudget);
}

DecodeResult decode_dynamic(const Mixture& mixture, const ModelParams& params,
                            const EmbeddingProvider& provider, size_t max_steps) {
  if (params.end_embedding.size() == 0) {
    throw ConfigError("dynamic decoding needs a checkpoint trained with --mode dynamic");
  }
  if (max_steps == 0) max_steps = mixture.candidates.size();
  DecodeLoop loop(mixture, params, provider, /*with_end=*/true);
  std::vector<TraceStep> trace;
  Termination termination = Termination::kFixedBudget;
  for (size_t i = 0; i < max_steps && loop.pool_size() > 0; ++i) {
    if (!loop.step(trace)) {
      termination = Termination::kEndToken;
      break;
    }
  }
  return finish_result(mixture, loop, std::move(trace), termination);
}

DecodeResult construct(const std::string& query_text,
                       const std::vector<std::string>& sentence_texts,
                       const ModelParams& params, const EmbeddingProvider& provider,
                       std::optional<size_t> budget) {
  Mixture m;
  m.mixture_id = "construct";
  m.query.id = "q";
  m.query.text = query_text;
  m.query.tokens = tokenize(query_text);
  if (m.query.tokens.empty()) throw DataError("query has no tokens");
  for (size_t i = 0; i < sentence_texts.size(); ++i) {
    Sentence s;
    s.id = "s" + std::to_string(i + 1);
    s.text = sentence_texts[i];
    s.tokens = tokenize(s.text);
    if (s.tokens.empty()) {
      throw DataError("sentence " + s.id + " has no tokens");
    }
    m.candidates.push_back(std::move(s));
  }

  if (m.candidates.empty()) {
    DecodeResult r;
    r.scenario_order.push_back(m.query.id);
    return r;
  }
  if (params.config.mode == TermMode::kDynamic) {
    return decode_dynamic(m, params, provider);
  }
  if (!budget.has_value()) {
    throw ConfigError("fixed-mode construct requires an explicit budget");
  }
  return decode_fixed(m, params, provider, std::min(*budget, m.candidates.size()));
}

std::string decode_result_to_json(const DecodeResult& result) {
  nlohmann::ordered_json j;
  j["predicted_ids"] = nlohmann::ordered_json::array();
  for (const auto& id : result.predicted_ids) j["predicted_ids"].push_back(id);
  j["predicted_order"] = result.predicted_order;
  j["scenario_order"] = result.scenario_order;
  j["termination"] = to_string(result.termination);
  j["trace"] = nlohmann::ordered_json::array();
  for (const auto& s : result.trace) {
    j["trace"].push_back(
        nlohmann::ordered_json{{"chosen", s.chosen}, {"slot", s.slot}, {"score", s.score}});
  }
  return j.dump();
}

}  // namespace scn
