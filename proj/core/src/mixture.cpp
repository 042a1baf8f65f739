#include "scn/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "json.hpp"

namespace scn {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::vector<Sentence> gold_candidates(const Scenario& target, Mixture& m) {
  if (target.sentences.size() < 2) {
    throw DataError("target scenario " + target.scenario_id +
                    " must have at least 2 sentences (query plus one candidate)");
  }
  m.query = target.sentences.front();
  std::vector<Sentence> gold(target.sentences.begin() + 1, target.sentences.end());
  int rank = 1;
  for (const auto& s : gold) {
    m.gold_ids.insert(s.id);
    m.gold_order[s.id] = rank++;
  }
  return gold;
}

void finish(Mixture& m, std::vector<Sentence> pool, Rng& rng) {
  rng.shuffle(pool);
  m.candidates = std::move(pool);
  std::unordered_set<std::string> seen{m.query.id};
  for (const auto& c : m.candidates) {
    if (!seen.insert(c.id).second) {
      throw DataError("duplicate sentence id in mixture pool: " + c.id);
    }
  }
}

std::vector<Sentence> sample_pad(const std::vector<Sentence>& pool, size_t need, Rng& rng,
                                 const std::string& what) {
  if (pool.size() < need) {
    throw DataError("generation error: " + what + " needs " + std::to_string(need) +
                    " pad sentences but the pool has " + std::to_string(pool.size()));
  }
  std::vector<Sentence> out;
  out.reserve(need);
  for (size_t i : rng.sample_indices(pool.size(), need)) out.push_back(pool[i]);
  return out;
}

ordered_json sentence_json(const Sentence& s) {
  return ordered_json{{"id", s.id}, {"text", s.text}};
}

Sentence sentence_from_json(const nlohmann::json& j, size_t line_no) {
  if (!j.contains("id") || !j.contains("text")) {
    throw DataError("mixture parse error at line " + std::to_string(line_no) +
                    ": sentence must contain \"id\" and \"text\"");
  }
  Sentence s;
  s.id = j.at("id").get<std::string>();
  s.text = j.at("text").get<std::string>();
  s.tokens = tokenize(s.text);
  return s;
}

struct SplitView {
  std::string name;
  std::vector<const Scenario*> scenarios;
  size_t count = 0;
};

Mixture generate_one(const SplitView& split, const GenerateConfig& cfg, size_t pad_to,
                     uint64_t seed) {
  Rng rng(seed);
  const auto& pool = split.scenarios;
  constexpr int kMaxAttempts = 20;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const Scenario& target = *pool[rng.below(pool.size())];
    if (target.sentences.size() < 2) continue;

    if (cfg.condition == MixCondition::kW18) {
      if (pool.size() < 2) {
        throw DataError("generation error in split " + split.name +
                        ": w18 needs at least 2 scenarios");
      }
      const Scenario* distractor;
      do {
        distractor = pool[rng.below(pool.size())];
      } while (distractor->scenario_id == target.scenario_id);
      return make_w18(target, *distractor, rng.next());
    }

    if (cfg.condition == MixCondition::kRand) {
      if (target.sentences.size() > pad_to) continue;  // resample a shorter target
      std::vector<Sentence> sentence_pool;
      for (const Scenario* s : pool) {
        if (s->scenario_id == target.scenario_id) continue;
        sentence_pool.insert(sentence_pool.end(), s->sentences.begin(), s->sentences.end());
      }
      return make_rand(target, sentence_pool, pad_to, rng.next());
    }

    // hybrid
    int n_distractors = cfg.num_scenarios - 1;
    if (pool.size() < static_cast<size_t>(cfg.num_scenarios)) {
      throw DataError("generation error in split " + split.name + ": hybrid-" +
                      std::to_string(cfg.num_scenarios) + " needs at least " +
                      std::to_string(cfg.num_scenarios) + " scenarios, have " +
                      std::to_string(pool.size()));
    }
    std::vector<const Scenario*> distractors;
    std::unordered_set<std::string> used{target.scenario_id};
    while (distractors.size() < static_cast<size_t>(n_distractors)) {
      const Scenario* s = pool[rng.below(pool.size())];
      if (used.insert(s->scenario_id).second) distractors.push_back(s);
    }
    size_t total = target.sentences.size();
    for (const Scenario* s : distractors) total += s->sentences.size();
    if (total > pad_to) continue;  // combo too long for the padding budget

    std::vector<Sentence> sentence_pool;
    for (const Scenario* s : pool) {
      if (used.count(s->scenario_id)) continue;
      sentence_pool.insert(sentence_pool.end(), s->sentences.begin(), s->sentences.end());
    }
    std::vector<Scenario> dvals;
    dvals.reserve(distractors.size());
    for (const Scenario* s : distractors) dvals.push_back(*s);
    return make_hybrid(target, dvals, sentence_pool, pad_to, rng.next());
  }
  throw DataError("generation error in split " + split.name +
                  ": could not sample a scenario combination fitting pad_to=" +
                  std::to_string(pad_to) + " after " + std::to_string(kMaxAttempts) +
                  " attempts");
}

}  // namespace

std::string to_string(MixCondition c) {
  switch (c) {
    case MixCondition::kW18: return "w18";
    case MixCondition::kRand: return "rand";
    case MixCondition::kHybrid: return "hybrid";
  }
  return "?";
}

MixCondition mix_condition_from_string(const std::string& s) {
  if (s == "w18") return MixCondition::kW18;
  if (s == "rand") return MixCondition::kRand;
  if (s == "hybrid") return MixCondition::kHybrid;
  throw ConfigError("unknown mixing condition: " + s);
}

Mixture make_w18(const Scenario& target, const Scenario& distractor, uint64_t seed) {
  if (target.scenario_id == distractor.scenario_id) {
    throw DataError("generation error: target and distractor share scenario_id " +
                    target.scenario_id);
  }
  Mixture m;
  m.mixture_id = "mx-" + std::to_string(seed);
  m.meta = {MixCondition::kW18, 2, seed};
  std::vector<Sentence> pool = gold_candidates(target, m);
  pool.insert(pool.end(), distractor.sentences.begin(), distractor.sentences.end());
  Rng rng(seed);
  finish(m, std::move(pool), rng);
  return m;
}

Mixture make_rand(const Scenario& target, const std::vector<Sentence>& sentence_pool,
                  size_t pad_to, uint64_t seed) {
  if (pad_to < target.sentences.size()) {
    throw DataError("generation error: pad_to=" + std::to_string(pad_to) +
                    " is smaller than the target scenario (" +
                    std::to_string(target.sentences.size()) + " sentences)");
  }
  std::unordered_set<std::string> target_ids;
  for (const auto& s : target.sentences) target_ids.insert(s.id);
  for (const auto& s : sentence_pool) {
    if (target_ids.count(s.id)) {
      throw DataError("generation error: sentence pool contains target sentence " + s.id);
    }
  }
  Mixture m;
  m.mixture_id = "mx-" + std::to_string(seed);
  m.meta = {MixCondition::kRand, 1, seed};
  std::vector<Sentence> pool = gold_candidates(target, m);
  Rng rng(seed);
  size_t need = pad_to - target.sentences.size();
  auto pad = sample_pad(sentence_pool, need, rng, "rand mixture");
  pool.insert(pool.end(), pad.begin(), pad.end());
  finish(m, std::move(pool), rng);
  return m;
}

Mixture make_hybrid(const Scenario& target, const std::vector<Scenario>& distractors,
                    const std::vector<Sentence>& sentence_pool, size_t pad_to, uint64_t seed) {
  if (distractors.empty() || distractors.size() > 3) {
    throw DataError("generation error: hybrid takes 1..3 distractor scenarios, got " +
                    std::to_string(distractors.size()));
  }
  std::unordered_set<std::string> ids{target.scenario_id};
  size_t total = target.sentences.size();
  for (const auto& d : distractors) {
    if (!ids.insert(d.scenario_id).second) {
      throw DataError("generation error: duplicate scenario_id " + d.scenario_id);
    }
    total += d.sentences.size();
  }
  if (pad_to < total) {
    throw DataError("generation error: pad_to=" + std::to_string(pad_to) +
                    " is smaller than the scenario sentences (" + std::to_string(total) + ")");
  }
  Mixture m;
  m.mixture_id = "mx-" + std::to_string(seed);
  m.meta = {MixCondition::kHybrid, static_cast<int>(1 + distractors.size()), seed};
  std::vector<Sentence> pool = gold_candidates(target, m);
  for (const auto& d : distractors) {
    pool.insert(pool.end(), d.sentences.begin(), d.sentences.end());
  }
  Rng rng(seed);
  auto pad = sample_pad(sentence_pool, pad_to - total, rng, "hybrid mixture");
  pool.insert(pool.end(), pad.begin(), pad.end());
  finish(m, std::move(pool), rng);
  return m;
}

DatasetManifest generate_dataset(const std::vector<Scenario>& corpus,
                                 const GenerateConfig& config, const std::string& out_dir) {
  if (corpus.empty()) throw DataError("generate_dataset: empty corpus");
  const auto& sp = config.split;
  double frac_sum = sp.train_frac + sp.dev_frac + sp.test_frac;
  if (std::abs(frac_sum - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1, got " + std::to_string(frac_sum));
  }
  if (config.condition == MixCondition::kHybrid &&
      (config.num_scenarios < 2 || config.num_scenarios > 4)) {
    throw ConfigError("hybrid num_scenarios must be 2, 3 or 4");
  }

  size_t pad_to = config.pad_to;
  if (pad_to == 0) {
    size_t total_sents = 0;
    for (const auto& s : corpus) total_sents += s.sentences.size();
    double mean = static_cast<double>(total_sents) / corpus.size();
    pad_to = static_cast<size_t>(std::ceil(mean * 4.0));
  }

  // Scenario-level split: shuffle once, then cut by fractions.
  std::vector<size_t> order(corpus.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(sp.seed);
  split_rng.shuffle(order);
  size_t n_train = static_cast<size_t>(std::llround(sp.train_frac * corpus.size()));
  size_t n_dev = static_cast<size_t>(std::llround(sp.dev_frac * corpus.size()));
  n_train = std::min(n_train, corpus.size());
  n_dev = std::min(n_dev, corpus.size() - n_train);

  SplitView splits[3];
  splits[0] = {"train", {}, sp.train_count};
  splits[1] = {"dev", {}, sp.dev_count};
  splits[2] = {"test", {}, sp.test_count};
  for (size_t i = 0; i < corpus.size(); ++i) {
    int bucket = i < n_train ? 0 : (i < n_train + n_dev ? 1 : 2);
    splits[bucket].scenarios.push_back(&corpus[order[i]]);
  }

  fs::create_directories(out_dir);
  DatasetManifest manifest;
  manifest.condition = to_string(config.condition);
  manifest.num_scenarios = config.condition == MixCondition::kHybrid ? config.num_scenarios
                           : config.condition == MixCondition::kW18  ? 2
                                                                     : 1;
  manifest.pad_to = pad_to;
  manifest.seed = sp.seed;

  for (const auto& split : splits) {
    if (split.count > 0 && split.scenarios.empty()) {
      throw DataError("generation error: split " + split.name + " has no scenarios but " +
                      std::to_string(split.count) + " mixtures were requested");
    }
    uint64_t base = splitmix64(sp.seed ^ fnv1a64(split.name));
    std::vector<Mixture> mixtures(split.count);
    parallel_for(split.count, config.jobs, [&](size_t i) {
      mixtures[i] = generate_one(split, config, pad_to, mix_seed(base, i));
      mixtures[i].mixture_id = "m-" + split.name + "-" + std::to_string(i);
    });
    std::string file = (fs::path(out_dir) / (split.name + ".jsonl")).string();
    save_mixtures(mixtures, file);
    manifest.counts[split.name] = split.count;
    manifest.scenario_counts[split.name] = split.scenarios.size();
    manifest.files[split.name] = split.name + ".jsonl";
  }
  save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

std::string mixture_to_jsonl_line(const Mixture& m) {
  ordered_json rec;
  rec["mixture_id"] = m.mixture_id;
  rec["query"] = sentence_json(m.query);
  rec["candidates"] = ordered_json::array();
  for (const auto& c : m.candidates) rec["candidates"].push_back(sentence_json(c));
  rec["gold_ids"] = ordered_json::array();
  for (const auto& id : m.gold_ids) rec["gold_ids"].push_back(id);
  ordered_json go;
  for (const auto& [id, rank] : m.gold_order) go[id] = rank;
  rec["gold_order"] = std::move(go);
  rec["meta"] = ordered_json{{"condition", to_string(m.meta.condition)},
                             {"num_scenarios", m.meta.num_scenarios},
                             {"seed", m.meta.seed}};
  return rec.dump();
}

Mixture mixture_from_jsonl_line(const std::string& line, size_t line_no) {
  nlohmann::json rec;
  try {
    rec = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("mixture parse error at line " + std::to_string(line_no) + ": " + e.what());
  }
  Mixture m;
  try {
    m.mixture_id = rec.at("mixture_id").get<std::string>();
    m.query = sentence_from_json(rec.at("query"), line_no);
    for (const auto& c : rec.at("candidates")) {
      m.candidates.push_back(sentence_from_json(c, line_no));
    }
    for (const auto& id : rec.at("gold_ids")) m.gold_ids.insert(id.get<std::string>());
    for (const auto& [id, rank] : rec.at("gold_order").items()) {
      m.gold_order[id] = rank.get<int>();
    }
    const auto& meta = rec.at("meta");
    m.meta.condition = mix_condition_from_string(meta.at("condition").get<std::string>());
    m.meta.num_scenarios = meta.at("num_scenarios").get<int>();
    m.meta.seed = meta.at("seed").get<uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("mixture parse error at line " + std::to_string(line_no) + ": " + e.what());
  }

  std::unordered_set<std::string> cand_ids;
  for (const auto& c : m.candidates) {
    if (!cand_ids.insert(c.id).second) {
      throw DataError("mixture at line " + std::to_string(line_no) + ": duplicate candidate id " +
                      c.id);
    }
  }
  std::vector<int> ranks;
  for (const auto& id : m.gold_ids) {
    if (!cand_ids.count(id)) {
      throw DataError("mixture at line " + std::to_string(line_no) + ": gold id " + id +
                      " missing from candidates");
    }
    auto it = m.gold_order.find(id);
    if (it == m.gold_order.end()) {
      throw DataError("mixture at line " + std::to_string(line_no) + ": gold id " + id +
                      " missing from gold_order");
    }
    ranks.push_back(it->second);
  }
  std::sort(ranks.begin(), ranks.end());
  for (size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] != static_cast<int>(i) + 1) {
      throw DataError("mixture at line " + std::to_string(line_no) +
                      ": gold_order ranks are not a contiguous 1..n sequence");
    }
  }
  return m;
}

std::vector<Mixture> load_mixtures(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("mixture file not found: " + path);
  std::vector<Mixture> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(mixture_from_jsonl_line(line, line_no));
  }
  return out;
}

void save_mixtures(const std::vector<Mixture>& mixtures, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write mixture file: " + path);
  for (const auto& m : mixtures) out << mixture_to_jsonl_line(m) << "\n";
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  ordered_json j;
  j["condition"] = m.condition;
  j["num_scenarios"] = m.num_scenarios;
  j["pad_to"] = m.pad_to;
  j["seed"] = m.seed;
  j["counts"] = m.counts;
  j["scenario_counts"] = m.scenario_counts;
  j["files"] = m.files;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("manifest not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest parse error: ") + e.what());
  }
  DatasetManifest m;
  m.condition = j.at("condition").get<std::string>();
  m.num_scenarios = j.at("num_scenarios").get<int>();
  m.pad_to = j.at("pad_to").get<size_t>();
  m.seed = j.at("seed").get<uint64_t>();
  m.counts = j.at("counts").get<std::map<std::string, size_t>>();
  m.scenario_counts = j.at("scenario_counts").get<std::map<std::string, size_t>>();
  m.files = j.at("files").get<std::map<std::string, std::string>>();
  return m;
}

}  // namespace scn
