#include "scn/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace scn {

namespace {

using ordered_json = nlohmann::ordered_json;

bool is_detachable_punct(char c) {
  switch (c) {
    case '.':
    case ',':
    case '!':
    case '?':
    case ';':
    case ':':
    case '"':
    case '\'':
    case ')':
    case ']':
    case '}':
      return true;
    default:
      return false;
  }
}

Sentence make_sentence(std::string id, std::string text) {
  Sentence s;
  s.id = std::move(id);
  s.text = std::move(text);
  s.tokens = tokenize(s.text);
  return s;
}

Scenario scenario_from_json(const nlohmann::json& rec, size_t line_no) {
  if (!rec.is_object() || !rec.contains("scenario_id") || !rec.contains("sentences")) {
    throw DataError("corpus parse error at line " + std::to_string(line_no) +
                    ": record must contain \"scenario_id\" and \"sentences\"");
  }
  Scenario sc;
  sc.scenario_id = rec.at("scenario_id").get<std::string>();
  for (const auto& js : rec.at("sentences")) {
    if (!js.contains("id") || !js.contains("text")) {
      throw DataError("corpus parse error at line " + std::to_string(line_no) +
                      ": sentence must contain \"id\" and \"text\"");
    }
    sc.sentences.push_back(
        make_sentence(js.at("id").get<std::string>(), js.at("text").get<std::string>()));
  }
  if (sc.sentences.empty()) {
    throw DataError("corpus parse error at line " + std::to_string(line_no) +
                    ": scenario has no sentences");
  }
  return sc;
}

/// Split a paragraph into sentences at ./!/? followed by whitespace.
std::vector<std::string> split_sentences(const std::string& paragraph) {
  std::vector<std::string> out;
  std::string cur;
  for (size_t i = 0; i < paragraph.size(); ++i) {
    char c = paragraph[i];
    cur.push_back(c);
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 >= paragraph.size() || std::isspace(static_cast<unsigned char>(paragraph[i + 1])))) {
      // Trim surrounding whitespace.
      size_t b = cur.find_first_not_of(" \t\r\n");
      size_t e = cur.find_last_not_of(" \t\r\n");
      if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
      cur.clear();
    }
  }
  size_t b = cur.find_first_not_of(" \t\r\n");
  if (b != std::string::npos) {
    size_t e = cur.find_last_not_of(" \t\r\n");
    out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

std::vector<Scenario> load_jsonl(std::ifstream& in) {
  std::vector<Scenario> scenarios;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("corpus parse error at line " + std::to_string(line_no) + ": " + e.what());
    }
    scenarios.push_back(scenario_from_json(rec, line_no));
  }
  return scenarios;
}

std::vector<Scenario> load_paragraphs(std::ifstream& in) {
  std::vector<Scenario> scenarios;
  std::string line;
  std::string paragraph;
  size_t index = 0;
  auto flush = [&] {
    if (paragraph.find_first_not_of(" \t\r\n") == std::string::npos) {
      paragraph.clear();
      return;
    }
    Scenario sc;
    sc.scenario_id = "p" + std::to_string(index);
    size_t si = 0;
    for (auto& text : split_sentences(paragraph)) {
      sc.sentences.push_back(make_sentence(sc.scenario_id + "-s" + std::to_string(si++), text));
    }
    if (!sc.sentences.empty()) {
      scenarios.push_back(std::move(sc));
      ++index;
    }
    paragraph.clear();
  };
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      flush();
    } else {
      if (!paragraph.empty()) paragraph.push_back(' ');
      paragraph += line;
    }
  }
  flush();
  return scenarios;
}

Eigen::VectorXd mean_word_vector(const Scenario& s, const EmbeddingProvider& embedder) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(embedder.dim());
  size_t n = 0;
  for (const auto& sent : s.sentences) {
    if (sent.tokens.empty()) continue;
    Eigen::MatrixXd m = embedder.embed(sent.tokens);
    sum += m.colwise().sum().transpose();
    n += sent.tokens.size();
  }
  if (n == 0) throw DataError("scenario " + s.scenario_id + " has no tokens");
  return sum / static_cast<double>(n);
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream iss(text);
  std::string piece;
  while (iss >> piece) {
    std::transform(piece.begin(), piece.end(), piece.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::string tail;  // detached terminal punctuation, reversed
    while (!piece.empty() && is_detachable_punct(piece.back())) {
      tail.push_back(piece.back());
      piece.pop_back();
    }
    if (!piece.empty()) tokens.push_back(piece);
    for (auto it = tail.rbegin(); it != tail.rend(); ++it) tokens.push_back(std::string(1, *it));
  }
  return tokens;
}

std::vector<Scenario> load_corpus(const std::string& path, CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw ConfigError("corpus file not found: " + path);
  std::vector<Scenario> scenarios =
      format == CorpusFormat::kJsonl ? load_jsonl(in) : load_paragraphs(in);
  if (scenarios.empty()) throw DataError("empty corpus: " + path);

  std::unordered_set<std::string> scenario_ids, sentence_ids;
  for (const auto& sc : scenarios) {
    if (!scenario_ids.insert(sc.scenario_id).second) {
      throw DataError("duplicate scenario_id in corpus: " + sc.scenario_id);
    }
    for (const auto& s : sc.sentences) {
      if (!sentence_ids.insert(s.id).second) {
        throw DataError("duplicate sentence id in corpus: " + s.id);
      }
    }
  }
  return scenarios;
}

std::string scenario_to_jsonl_line(const Scenario& s) {
  ordered_json rec;
  rec["scenario_id"] = s.scenario_id;
  rec["sentences"] = ordered_json::array();
  for (const auto& sent : s.sentences) {
    rec["sentences"].push_back(ordered_json{{"id", sent.id}, {"text", sent.text}});
  }
  return rec.dump();
}

void save_corpus(const std::vector<Scenario>& scenarios, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write corpus file: " + path);
  for (const auto& s : scenarios) out << scenario_to_jsonl_line(s) << "\n";
}

std::vector<EvalPair> load_eval_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("evaluation set not found: " + path);
  std::vector<EvalPair> pairs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("eval-set parse error at line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.contains("topic") || !rec.contains("scenarios") || rec.at("scenarios").size() != 2) {
      throw DataError("eval-set parse error at line " + std::to_string(line_no) +
                      ": expected {\"topic\", \"scenarios\":[a, b]}");
    }
    EvalPair p;
    p.topic = rec.at("topic").get<std::string>();
    p.first = scenario_from_json(rec.at("scenarios")[0], line_no);
    p.second = scenario_from_json(rec.at("scenarios")[1], line_no);
    p.first.source = ScenarioSource::kHumanCurated;
    p.second.source = ScenarioSource::kHumanCurated;
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw DataError("empty evaluation set: " + path);
  return pairs;
}

CorpusStats build_vocab(const std::vector<Scenario>& scenarios, size_t cap) {
  if (cap < 1) throw ConfigError("vocab cap must be >= 1");
  if (scenarios.empty()) throw DataError("build_vocab: empty corpus");

  std::unordered_map<std::string, uint64_t> freq;
  size_t total_tokens = 0;
  size_t total_sents = 0;
  for (const auto& sc : scenarios) {
    total_sents += sc.sentences.size();
    for (const auto& sent : sc.sentences) {
      total_tokens += sent.tokens.size();
      for (const auto& t : sent.tokens) ++freq[t];
    }
  }

  std::vector<std::pair<std::string, uint64_t>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (items.size() > cap) items.resize(cap);

  CorpusStats stats;
  stats.num_scenarios = scenarios.size();
  stats.vocab.reserve(items.size() + 2);
  for (auto& it : items) stats.vocab.push_back(std::move(it.first));
  stats.vocab.push_back(kUnkToken);
  stats.vocab.push_back(kEndToken);
  stats.words_per_scenario = static_cast<double>(total_tokens) / scenarios.size();
  stats.sents_per_scenario = static_cast<double>(total_sents) / scenarios.size();
  return stats;
}

void save_vocab(const CorpusStats& stats, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write vocab file: " + path);
  for (const auto& t : stats.vocab) out << t << "\n";
}

double topic_similarity(const Scenario& a, const Scenario& b,
                        const EmbeddingProvider& embedder) {
  Eigen::VectorXd va = mean_word_vector(a, embedder);
  Eigen::VectorXd vb = mean_word_vector(b, embedder);
  double na = va.norm();
  double nb = vb.norm();
  if (na == 0.0 || nb == 0.0) {
    throw UndefinedValueError("topic_similarity undefined: zero-norm mean vector");
  }
  return va.dot(vb) / (na * nb);
}

}  // namespace scn
