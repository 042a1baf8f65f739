// Command-line front end: synth -> train -> eval / construct, plus a
// mixture inspector. Every artifact-producing command drops a run
// manifest next to its outputs so runs can be replayed byte for byte.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "scn/corpus.hpp"
#include "scn/decoder.hpp"
#include "scn/evalkit.hpp"
#include "scn/mixture.hpp"
#include "scn/model.hpp"
#include "scn/training.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct ProviderFlags {
  std::string kind = "stub";
  int dim = 32;
  uint64_t seed = 1;
  std::string table;
};

void add_provider_flags(CLI::App* cmd, ProviderFlags& pf) {
  cmd->add_option("--provider", pf.kind, "Embedding provider: stub or table")
      ->check(CLI::IsMember({"stub", "table"}));
  cmd->add_option("--embed-dim", pf.dim, "Word vector width (stub provider)");
  cmd->add_option("--provider-seed", pf.seed, "Stub provider seed");
  cmd->add_option("--table", pf.table, "Embedding table file (table provider)");
}

scn::ProviderConfig to_provider_config(const ProviderFlags& pf) {
  scn::ProviderConfig pc;
  pc.kind = pf.kind;
  pc.dim = pf.dim;
  pc.seed = pf.seed;
  pc.path = pf.table;
  if (pc.kind == "table") {
    if (pc.path.empty()) throw scn::ConfigError("--provider table requires --table <file>");
    pc.dim = scn::TableEmbedding(pc.path).dim();
  }
  return pc;
}

/// Options not passed on the command line fall back to the config file,
/// then to built-in defaults.
class ConfigFile {
 public:
  explicit ConfigFile(const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw scn::ConfigError("config file not found: " + path);
    try {
      in >> data_;
    } catch (const nlohmann::json::exception& e) {
      throw scn::ConfigError("config file parse error: " + std::string(e.what()));
    }
  }

  template <typename T>
  void fill(const CLI::App* cmd, const std::string& flag, const char* key, T& out) const {
    if (data_.is_null()) return;
    const CLI::Option* opt = cmd->get_option(flag);
    if (opt->count() == 0 && data_.contains(key)) out = data_.at(key).get<T>();
  }

 private:
  nlohmann::json data_;
};

void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const ordered_json& config, const std::vector<std::string>& input_paths,
                        const std::vector<std::string>& output_names) {
  ordered_json j;
  j["command"] = command;
  j["version"] = scn::kVersion;
  j["config"] = config;
  ordered_json inputs;
  for (const auto& p : input_paths) inputs[p] = scn::hash_file_hex(p);
  j["inputs"] = std::move(inputs);
  j["outputs"] = output_names;
  std::ofstream out((fs::path(out_dir) / "run_manifest.json").string(), std::ios::binary);
  if (!out) throw scn::ConfigError("cannot write run manifest under " + out_dir);
  out << j.dump(2) << "\n";
}

std::vector<scn::Mixture> load_split(const std::string& data_dir, const std::string& split) {
  scn::DatasetManifest manifest =
      scn::load_manifest((fs::path(data_dir) / "manifest.json").string());
  auto it = manifest.files.find(split);
  if (it == manifest.files.end()) {
    throw scn::ConfigError("dataset has no split named " + split);
  }
  return scn::load_mixtures((fs::path(data_dir) / it->second).string());
}

int run_synth(const std::string& config_path, CLI::App* cmd, const std::string& corpus_path,
              const std::string& format, std::string condition, size_t pad_to, size_t n_train,
              size_t n_dev, size_t n_test, const std::string& fracs, uint64_t seed,
              const std::string& out_dir, int jobs) {
  ConfigFile cf(config_path);
  cf.fill(cmd, "--condition", "condition", condition);
  cf.fill(cmd, "--pad-to", "pad_to", pad_to);
  cf.fill(cmd, "--seed", "seed", seed);

  scn::GenerateConfig gc;
  if (condition == "w18") {
    gc.condition = scn::MixCondition::kW18;
  } else if (condition == "rand") {
    gc.condition = scn::MixCondition::kRand;
  } else if (condition.rfind("hybrid-", 0) == 0) {
    gc.condition = scn::MixCondition::kHybrid;
    gc.num_scenarios = std::stoi(condition.substr(7));
  } else {
    throw scn::ConfigError("unknown condition: " + condition);
  }
  gc.pad_to = pad_to;
  gc.jobs = jobs;
  gc.split.train_count = n_train;
  gc.split.dev_count = n_dev;
  gc.split.test_count = n_test;
  gc.split.seed = seed;
  {
    std::istringstream iss(fracs);
    char comma;
    if (!(iss >> gc.split.train_frac >> comma >> gc.split.dev_frac >> comma >>
          gc.split.test_frac)) {
      throw scn::ConfigError("--fracs must look like 0.85,0.05,0.10");
    }
  }

  auto corpus = scn::load_corpus(corpus_path, format == "jsonl"
                                                  ? scn::CorpusFormat::kJsonl
                                                  : scn::CorpusFormat::kPlainParagraphs);
  scn::DatasetManifest manifest = scn::generate_dataset(corpus, gc, out_dir);

  ordered_json config{{"corpus", corpus_path}, {"format", format},
                      {"condition", condition}, {"pad_to", manifest.pad_to},
                      {"counts", manifest.counts}, {"seed", seed},
                      {"fracs", fracs}};
  std::vector<std::string> outputs{"manifest.json"};
  for (const auto& [split, file] : manifest.files) outputs.push_back(file);
  write_run_manifest(out_dir, "synth", config, {corpus_path}, outputs);
  std::cerr << "wrote " << manifest.counts.at("train") << "/" << manifest.counts.at("dev") << "/"
            << manifest.counts.at("test") << " mixtures to " << out_dir << "\n";
  return 0;
}

int run_train(const std::string& config_path, CLI::App* cmd, const std::string& data_dir,
              std::string head, std::string mode, int epochs, double lr, int batch,
              uint64_t seed, int hidden, int relation_width, bool no_rn_normalize,
              bool fix_states, bool pairwise_symmetric, const ProviderFlags& pf,
              const std::string& init_from, const std::string& out_dir, int jobs) {
  ConfigFile cf(config_path);
  cf.fill(cmd, "--head", "head", head);
  cf.fill(cmd, "--mode", "mode", mode);
  cf.fill(cmd, "--epochs", "epochs", epochs);
  cf.fill(cmd, "--lr", "lr", lr);
  cf.fill(cmd, "--batch", "batch", batch);
  cf.fill(cmd, "--seed", "seed", seed);
  cf.fill(cmd, "--hidden", "hidden", hidden);

  scn::TrainConfig tc;
  tc.head = scn::head_from_string(head);
  tc.mode = scn::term_mode_from_string(mode);
  tc.epochs = epochs;
  tc.lr = lr;
  tc.batch_size = batch;
  tc.seed = seed;
  tc.hidden = hidden;
  tc.relation_width = relation_width;
  tc.rn_normalize = !no_rn_normalize;
  tc.resample_states = !fix_states;
  tc.pairwise_symmetric = pairwise_symmetric;
  tc.provider = to_provider_config(pf);
  tc.embed_dim = tc.provider.dim;
  tc.jobs = jobs;

  auto train_mixtures = load_split(data_dir, "train");
  std::vector<scn::Mixture> dev_mixtures;
  try {
    dev_mixtures = load_split(data_dir, "dev");
  } catch (const scn::ConfigError&) {
    // datasets without a dev split train to the final epoch
  }

  std::optional<scn::ModelParams> init;
  if (!init_from.empty()) init = scn::load_checkpoint(init_from);

  fs::create_directories(out_dir);
  std::ofstream log_file((fs::path(out_dir) / "training_log.jsonl").string(), std::ios::binary);
  scn::TrainResult result = scn::train(train_mixtures, dev_mixtures, tc,
                                       init ? &*init : nullptr, &log_file);

  std::string ckpt = (fs::path(out_dir) / "checkpoint.json").string();
  scn::save_checkpoint(result.params, ckpt);

  ordered_json config{{"data", data_dir},       {"head", head},
                      {"mode", mode},           {"epochs", epochs},
                      {"lr", lr},               {"batch", batch},
                      {"seed", seed},           {"hidden", hidden},
                      {"relation_width", relation_width},
                      {"rn_normalize", tc.rn_normalize},
                      {"resample_states", tc.resample_states},
                      {"provider", ordered_json{{"kind", tc.provider.kind},
                                                {"dim", tc.provider.dim},
                                                {"seed", tc.provider.seed},
                                                {"path", tc.provider.path}}}};
  std::vector<std::string> inputs{(fs::path(data_dir) / "manifest.json").string()};
  if (!init_from.empty()) inputs.push_back(init_from);
  write_run_manifest(out_dir, "train", config, inputs,
                     {"checkpoint.json", "training_log.jsonl"});
  std::cerr << "best epoch " << result.best_epoch << " dev F1 " << result.best_dev_f1
            << "; checkpoint at " << ckpt << "\n";
  return 0;
}

int run_eval(const std::string& config_path, CLI::App* cmd, const std::string& data_dir,
             std::string split, std::string head, const std::string& checkpoint,
             std::string mode, uint64_t seed, const ProviderFlags& pf,
             const std::string& out_dir, int jobs) {
  ConfigFile cf(config_path);
  cf.fill(cmd, "--split", "split", split);
  cf.fill(cmd, "--head", "head", head);
  cf.fill(cmd, "--mode", "mode", mode);
  cf.fill(cmd, "--seed", "seed", seed);

  const bool trainable = head != "unif" && head != "avg";
  std::optional<scn::ModelParams> params;
  std::unique_ptr<scn::EmbeddingProvider> provider;
  if (trainable) {
    if (checkpoint.empty()) {
      throw scn::ConfigError("head " + head + " requires --checkpoint");
    }
    params = scn::load_checkpoint(checkpoint);
    provider = scn::make_provider(params->config.provider);
  } else {
    provider = scn::make_provider(to_provider_config(pf));
  }

  auto mixtures = load_split(data_dir, split);
  scn::DecodeFn decode = scn::make_decode_fn(head, params ? &*params : nullptr, *provider,
                                             scn::term_mode_from_string(mode), seed);
  scn::Report report = scn::evaluate(mixtures, decode, jobs);
  report.config_echo = {{"data", data_dir},   {"split", split}, {"head", head},
                        {"checkpoint", checkpoint}, {"mode", mode},
                        {"seed", std::to_string(seed)}};
  scn::write_report(report, out_dir);

  ordered_json config{{"data", data_dir}, {"split", split},         {"head", head},
                      {"checkpoint", checkpoint}, {"mode", mode},   {"seed", seed}};
  std::vector<std::string> inputs{(fs::path(data_dir) / "manifest.json").string()};
  if (!checkpoint.empty()) inputs.push_back(checkpoint);
  write_run_manifest(out_dir, "eval", config, inputs, {"report.json", "report.csv"});
  std::cout << "macro_f1 " << report.macro_f1 << " macro_tau "
            << (report.macro_tau ? std::to_string(*report.macro_tau) : "n/a") << " rho "
            << (report.rho_tau_f1 ? std::to_string(*report.rho_tau_f1) : "n/a") << "\n";
  return 0;
}

int run_construct(const std::string& checkpoint, const std::string& query,
                  const std::string& sentences_path, std::optional<size_t> budget,
                  const std::string& out_path) {
  scn::ModelParams params = scn::load_checkpoint(checkpoint);
  auto provider = scn::make_provider(params.config.provider);

  std::vector<std::string> sentences;
  if (sentences_path == "-") {
    std::string line;
    while (std::getline(std::cin, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) sentences.push_back(line);
    }
  } else if (!sentences_path.empty()) {
    std::ifstream in(sentences_path);
    if (!in) throw scn::ConfigError("sentence file not found: " + sentences_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw scn::DataError("sentence file parse error: " + std::string(e.what()));
    }
    if (!j.is_array()) throw scn::DataError("sentence file must hold a JSON array");
    for (const auto& item : j) {
      if (item.is_string()) {
        sentences.push_back(item.get<std::string>());
      } else if (item.is_object() && item.contains("text")) {
        sentences.push_back(item.at("text").get<std::string>());
      } else {
        throw scn::DataError("sentence entries must be strings or {\"text\": ...} objects");
      }
    }
  }

  scn::DecodeResult result = scn::construct(query, sentences, params, *provider, budget);
  std::string json = scn::decode_result_to_json(result);
  if (out_path.empty() || out_path == "-") {
    std::cout << json << "\n";
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw scn::ConfigError("cannot write " + out_path);
    out << json << "\n";
  }
  return 0;
}

int run_inspect(const std::string& data_dir, const std::string& split, size_t index) {
  auto mixtures = load_split(data_dir, split);
  if (index >= mixtures.size()) {
    throw scn::ConfigError("index " + std::to_string(index) + " out of range; split has " +
                           std::to_string(mixtures.size()) + " mixtures");
  }
  const scn::Mixture& m = mixtures[index];
  std::cout << "mixture " << m.mixture_id << " (" << scn::to_string(m.meta.condition) << ", "
            << m.meta.num_scenarios << " scenarios, seed " << m.meta.seed << ")\n";
  std::cout << "query     | " << m.query.text << "\n";
  for (size_t i = 0; i < m.candidates.size(); ++i) {
    const auto& c = m.candidates[i];
    auto it = m.gold_order.find(c.id);
    if (it != m.gold_order.end()) {
      std::cout << "gold #" << it->second << "   | " << c.text << "\n";
    } else {
      std::cout << "          | " << c.text << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query-driven scenario construction from sentence mixtures"};
  app.set_version_flag("--version", scn::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override file values)")
      ->configurable(false);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic mixtures from a corpus");
  std::string corpus_path, format = "jsonl", condition = "hybrid-4", fracs = "0.85,0.05,0.10";
  std::string out_dir;
  size_t pad_to = 0, n_train = 100, n_dev = 10, n_test = 10;
  uint64_t synth_seed = 1;
  int jobs = 1;
  synth->add_option("--corpus", corpus_path, "Corpus file")->required();
  synth->add_option("--format", format, "Corpus format")
      ->check(CLI::IsMember({"jsonl", "paragraphs"}));
  synth->add_option("--condition", condition,
                    "Mixing condition: w18, rand, hybrid-2, hybrid-3, hybrid-4");
  synth->add_option("--pad-to", pad_to, "Mixture size incl. query (0 = derive from corpus)");
  synth->add_option("--train", n_train, "Training mixtures");
  synth->add_option("--dev", n_dev, "Validation mixtures");
  synth->add_option("--test", n_test, "Test mixtures");
  synth->add_option("--fracs", fracs, "Scenario split fractions train,dev,test");
  synth->add_option("--seed", synth_seed, "Generation seed");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--jobs", jobs, "Worker threads");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a scoring head on a dataset");
  std::string data_dir, head = "comp-ins-rn", mode = "fixed", init_from, train_out;
  int epochs = 10, batch = 16, hidden = 200, relation_width = 200;
  double lr = 1e-4;
  uint64_t train_seed = 1;
  bool no_rn_normalize = false, fix_states = false;
  ProviderFlags train_pf;
  train_cmd->add_option("--data", data_dir, "Dataset directory (from synth)")->required();
  train_cmd->add_option("--head", head, "comp, comp-ins, comp-ins-rn or pairwise");
  train_cmd->add_option("--mode", mode, "Termination mode: fixed or dynamic");
  train_cmd->add_option("--epochs", epochs, "Training epochs");
  train_cmd->add_option("--lr", lr, "Learning rate");
  train_cmd->add_option("--batch", batch, "Timesteps per optimizer update");
  train_cmd->add_option("--seed", train_seed, "Training seed");
  train_cmd->add_option("--hidden", hidden, "Sentence encoding width h");
  train_cmd->add_option("--relation-width", relation_width, "Relation vector width l");
  train_cmd->add_flag("--no-rn-normalize", no_rn_normalize,
                      "Disable length normalization of word-pair sums");
  train_cmd->add_flag("--fix-states", fix_states,
                      "Sample teacher-forced states once instead of per epoch");
  bool pairwise_symmetric = false;
  train_cmd->add_flag("--pairwise-symmetric", pairwise_symmetric,
                      "Average both argument orders in the pairwise baseline");
  add_provider_flags(train_cmd, train_pf);
  train_cmd->add_option("--init-from", init_from, "Checkpoint to resume from");
  train_cmd->add_option("--out", train_out, "Output directory")->required();
  train_cmd->add_option("--jobs", jobs, "Worker threads for dev decoding");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a head or baseline on a split");
  std::string eval_data, eval_split = "test", eval_head = "comp-ins-rn", eval_ckpt;
  std::string eval_mode = "fixed", eval_out;
  uint64_t eval_seed = 1;
  ProviderFlags eval_pf;
  eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
  eval_cmd->add_option("--split", eval_split, "train, dev or test");
  eval_cmd->add_option("--head", eval_head,
                       "unif, avg, pairwise, comp, comp-ins or comp-ins-rn");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint for trainable heads");
  eval_cmd->add_option("--mode", eval_mode, "fixed or dynamic");
  eval_cmd->add_option("--seed", eval_seed, "Seed for the unif baseline");
  add_provider_flags(eval_cmd, eval_pf);
  eval_cmd->add_option("--out", eval_out, "Output directory")->required();
  eval_cmd->add_option("--jobs", jobs, "Worker threads");

  // construct
  auto* cons = app.add_subcommand("construct", "Build a scenario for a query");
  std::string cons_ckpt, cons_query, cons_sentences, cons_out;
  size_t cons_budget = 0;
  cons->add_option("--checkpoint", cons_ckpt, "Trained checkpoint")->required();
  cons->add_option("--query", cons_query, "Query sentence")->required();
  cons->add_option("--sentences", cons_sentences,
                   "JSON array of candidate sentences, or - for stdin lines");
  auto* budget_opt = cons->add_option("--budget", cons_budget,
                                      "Selections to make (fixed-mode checkpoints)");
  cons->add_option("--out", cons_out, "Output file (default stdout)");

  // inspect
  auto* insp = app.add_subcommand("inspect", "Pretty-print one mixture with gold marks");
  std::string insp_data, insp_split = "train";
  size_t insp_index = 0;
  insp->add_option("--data", insp_data, "Dataset directory")->required();
  insp->add_option("--split", insp_split, "Split name");
  insp->add_option("--index", insp_index, "Mixture index");

  try {
    app.parse(argc, argv);
    if (synth->parsed()) {
      return run_synth(config_path, synth, corpus_path, format, condition, pad_to, n_train,
                       n_dev, n_test, fracs, synth_seed, out_dir, jobs);
    }
    if (train_cmd->parsed()) {
      return run_train(config_path, train_cmd, data_dir, head, mode, epochs, lr, batch,
                       train_seed, hidden, relation_width, no_rn_normalize, fix_states,
                       pairwise_symmetric, train_pf, init_from, train_out, jobs);
    }
    if (eval_cmd->parsed()) {
      return run_eval(config_path, eval_cmd, eval_data, eval_split, eval_head, eval_ckpt,
                      eval_mode, eval_seed, eval_pf, eval_out, jobs);
    }
    if (cons->parsed()) {
      std::optional<size_t> budget;
      if (budget_opt->count() > 0) budget = cons_budget;
      return run_construct(cons_ckpt, cons_query, cons_sentences, budget, cons_out);
    }
    if (insp->parsed()) {
      return run_inspect(insp_data, insp_split, insp_index);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const scn::ConfigError& e) {
    std::cerr << ordered_json{{"error", {{"type", "config"}, {"message", e.what()}}}}.dump()
              << "\n";
    return 2;
  } catch (const scn::DataError& e) {
    std::cerr << ordered_json{{"error", {{"type", "data"}, {"message", e.what()}}}}.dump()
              << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << ordered_json{{"error", {{"type", "internal"}, {"message", e.what()}}}}.dump()
              << "\n";
    return 1;
  }
  return 0;
}
