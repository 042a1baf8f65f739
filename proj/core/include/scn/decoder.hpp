#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scn/model.hpp"

namespace scn {

/// Decoder state at one timestep: the ordered scenario-in-construction and
/// the untouched candidate pool.
struct ScenarioState {
  std::vector<std::string> selected;  // ordered, query first
  std::set<std::string> remaining;
  size_t step = 1;  // == selected.size()
};

enum class Termination { kFixedBudget, kEndToken };
std::string to_string(Termination t);

struct TraceStep {
  std::string chosen;
  int slot = 0;  // 1-based insertion slot; appends record |T|+1
  double score = 0.0;
};

struct DecodeResult {
  std::set<std::string> predicted_ids;
  std::vector<std::string> predicted_order;  // candidates only, final scenario order
  std::vector<std::string> scenario_order;   // query included
  std::vector<TraceStep> trace;
  Termination termination = Termination::kFixedBudget;
};

/// Run exactly `budget` greedy selections. comp appends; the insertion
/// heads place each pick at its argmax slot. budget must not exceed the
/// pool.
DecodeResult decode_fixed(const Mixture& mixture, const ModelParams& params,
                          const EmbeddingProvider& provider, size_t budget);

/// Select until <end> wins the argmax, the pool empties, or max_steps is
/// reached (0 = pool size). <end> never enters the predicted set.
DecodeResult decode_dynamic(const Mixture& mixture, const ModelParams& params,
                            const EmbeddingProvider& provider, size_t max_steps = 0);

/// User-facing entry: wrap raw sentences into an ad-hoc mixture (no gold)
/// and decode per the checkpoint's termination mode. Fixed-mode
/// checkpoints need an explicit budget.
DecodeResult construct(const std::string& query_text,
                       const std::vector<std::string>& sentence_texts,
                       const ModelParams& params, const EmbeddingProvider& provider,
                       std::optional<size_t> budget = std::nullopt);

std::string decode_result_to_json(const DecodeResult& result);

}  // namespace scn
