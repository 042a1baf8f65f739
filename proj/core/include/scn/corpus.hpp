#pragma once

#include <map>
#include <string>
#include <vector>

#include "scn/embedding.hpp"

namespace scn {

/// One event-denoting sentence. Tokens are derived from the text with
/// tokenize(): lowercased, whitespace-split, terminal punctuation detached.
struct Sentence {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
};

enum class ScenarioSource { kCorpusParagraph, kHumanCurated };

/// An ordered list of mutually compatible sentences. Order is the gold
/// reading order.
struct Scenario {
  std::string scenario_id;
  std::vector<Sentence> sentences;
  ScenarioSource source = ScenarioSource::kCorpusParagraph;
};

struct CorpusStats {
  size_t num_scenarios = 0;
  /// Most frequent tokens (descending frequency, ties lexicographic),
  /// truncated to the configured cap, with <unk> and <end> appended.
  std::vector<std::string> vocab;
  double words_per_scenario = 0.0;
  double sents_per_scenario = 0.0;
};

/// A topic question with two competing scenarios, as found in
/// human-curated evaluation files.
struct EvalPair {
  std::string topic;
  Scenario first;
  Scenario second;
};

enum class CorpusFormat { kJsonl, kPlainParagraphs };

/// Lowercase, split on whitespace, detach terminal punctuation into
/// separate tokens ("murdered." -> ["murdered", "."]).
std::vector<std::string> tokenize(const std::string& text);

/// Read a corpus. JSONL: one {"scenario_id", "sentences":[{"id","text"}]}
/// object per line. Plain paragraphs: blank-line-separated paragraphs, one
/// scenario each, split at sentence boundaries.
/// Throws ConfigError if the file is missing, DataError on malformed
/// records (naming the line) or an empty corpus.
std::vector<Scenario> load_corpus(const std::string& path, CorpusFormat format);

/// Canonical JSONL serialization; load_corpus(save_corpus(x)) == x.
void save_corpus(const std::vector<Scenario>& scenarios, const std::string& path);
std::string scenario_to_jsonl_line(const Scenario& s);

/// Evaluation-set JSONL: {"topic": str, "scenarios": [Scenario, Scenario]}.
std::vector<EvalPair> load_eval_set(const std::string& path);

/// Token statistics and frequency-capped vocabulary. cap >= 1.
CorpusStats build_vocab(const std::vector<Scenario>& scenarios, size_t cap);

/// One token per line; byte-identical for identical inputs.
void save_vocab(const CorpusStats& stats, const std::string& path);

/// Cosine similarity between the two scenarios' mean word vectors.
/// Symmetric; 1.0 for identical scenarios. Higher similarity means the
/// pair is harder to separate. Throws UndefinedValueError when either mean
/// vector has zero norm.
double topic_similarity(const Scenario& a, const Scenario& b,
                        const EmbeddingProvider& embedder);

}  // namespace scn
