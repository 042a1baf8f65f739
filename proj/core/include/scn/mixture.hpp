#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "scn/corpus.hpp"

namespace scn {

enum class MixCondition { kW18, kRand, kHybrid };

std::string to_string(MixCondition c);
MixCondition mix_condition_from_string(const std::string& s);

/// A query plus a shuffled candidate pool with gold supervision. The query
/// is always the first sentence of the target scenario; gold_ids are the
/// remaining target sentences; gold_order ranks them 1..n in target order.
struct Mixture {
  std::string mixture_id;
  Sentence query;
  std::vector<Sentence> candidates;
  std::set<std::string> gold_ids;
  std::map<std::string, int> gold_order;
  struct Meta {
    MixCondition condition = MixCondition::kW18;
    int num_scenarios = 2;
    uint64_t seed = 0;
  } meta;
};

/// Scenario-level split fractions plus per-split mixture counts. The split
/// is disjoint at scenario level: no scenario contributes to two splits.
struct SplitSpec {
  double train_frac = 0.85;
  double dev_frac = 0.05;
  double test_frac = 0.10;
  size_t train_count = 0;
  size_t dev_count = 0;
  size_t test_count = 0;
  uint64_t seed = 1;
};

/// Target scenario mixed with one complete distractor scenario.
Mixture make_w18(const Scenario& target, const Scenario& distractor, uint64_t seed);

/// Target scenario padded with unconnected sentences sampled without
/// replacement from sentence_pool, up to pad_to sentences total (query
/// included). sentence_pool must not contain target sentences.
Mixture make_rand(const Scenario& target, const std::vector<Sentence>& sentence_pool,
                  size_t pad_to, uint64_t seed);

/// Target scenario mixed with 1..3 whole distractor scenarios plus random
/// pad sentences up to pad_to sentences total (query included).
Mixture make_hybrid(const Scenario& target, const std::vector<Scenario>& distractors,
                    const std::vector<Sentence>& sentence_pool, size_t pad_to, uint64_t seed);

struct GenerateConfig {
  MixCondition condition = MixCondition::kHybrid;
  int num_scenarios = 4;  // scenarios per mixture incl. target (hybrid only)
  size_t pad_to = 0;      // 0 = derive from corpus stats (mean sents x 4, rounded up)
  SplitSpec split;
  int jobs = 1;
};

struct DatasetManifest {
  std::string condition;
  int num_scenarios = 0;
  size_t pad_to = 0;
  uint64_t seed = 0;
  std::map<std::string, size_t> counts;           // split -> mixtures
  std::map<std::string, size_t> scenario_counts;  // split -> scenarios
  std::map<std::string, std::string> files;       // split -> jsonl path
};

/// Write per-split mixture JSONL files plus manifest.json into out_dir.
/// Fully determined by (corpus, config); reruns are byte-identical.
DatasetManifest generate_dataset(const std::vector<Scenario>& corpus,
                                 const GenerateConfig& config, const std::string& out_dir);

std::string mixture_to_jsonl_line(const Mixture& m);
Mixture mixture_from_jsonl_line(const std::string& line, size_t line_no);

std::vector<Mixture> load_mixtures(const std::string& path);
void save_mixtures(const std::vector<Mixture>& mixtures, const std::string& path);

void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

}  // namespace scn
