#include "scn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "json.hpp"

namespace scn {

namespace {

std::vector<std::string> gold_in_order(const Mixture& m) {
  std::vector<std::string> gold(m.gold_ids.begin(), m.gold_ids.end());
  std::sort(gold.begin(), gold.end(), [&](const std::string& a, const std::string& b) {
    return m.gold_order.at(a) < m.gold_order.at(b);
  });
  return gold;
}

const Sentence& sentence_by_id(const Mixture& m, const std::string& id) {
  if (m.query.id == id) return m.query;
  for (const auto& c : m.candidates) {
    if (c.id == id) return c;
  }
  throw DataError("mixture " + m.mixture_id + " has no sentence " + id);
}

struct ExampleRef {
  size_t mixture = 0;
  size_t state = 0;
};

ModelConfig config_from_train(const TrainConfig& c) {
  ModelConfig mc;
  mc.head = c.head;
  mc.mode = c.mode;
  mc.embed_dim = c.embed_dim;
  mc.hidden = c.hidden;
  mc.relation_width = c.relation_width;
  mc.rn_normalize = c.rn_normalize;
  mc.pairwise_symmetric = c.pairwise_symmetric;
  mc.provider = c.provider;
  if (c.provider.kind == "table") mc.vocab_hash = hash_file_hex(c.provider.path);
  return mc;
}

double finite_or_throw(double loss, const Mixture& m) {
  if (!std::isfinite(loss)) {
    throw DataError("non-finite loss on mixture " + m.mixture_id +
                    "; aborting (check learning rate and inputs)");
  }
  return loss;
}

}  // namespace

std::vector<TrainExample> sample_teacher_states(const Mixture& mixture, Rng& rng,
                                                TermMode mode) {
  const std::vector<std::string> gold = gold_in_order(mixture);
  const size_t n = gold.size();
  std::vector<TrainExample> out;
  out.reserve(n + 1);
  for (size_t i = 1; i <= n; ++i) {
    TrainExample ex;
    std::vector<size_t> subset = rng.sample_indices(n, i - 1);
    std::sort(subset.begin(), subset.end());
    std::set<std::string> chosen;
    ex.partial.push_back(mixture.query.id);
    for (size_t idx : subset) {
      ex.partial.push_back(gold[idx]);
      chosen.insert(gold[idx]);
    }
    for (const auto& id : gold) {
      if (!chosen.count(id)) ex.remaining_gold.insert(id);
    }
    for (const auto& c : mixture.candidates) {
      if (!chosen.count(c.id)) ex.pool.push_back(c.id);
    }
    out.push_back(std::move(ex));
  }
  if (mode == TermMode::kDynamic) {
    TrainExample ex;
    ex.terminal = true;
    ex.partial.push_back(mixture.query.id);
    for (const auto& id : gold) ex.partial.push_back(id);
    for (const auto& c : mixture.candidates) {
      if (!mixture.gold_ids.count(c.id)) ex.pool.push_back(c.id);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

int correct_slot(const std::map<std::string, int>& gold_order,
                 const std::vector<std::string>& partial, const std::string& candidate_id) {
  auto rank_of = [&gold_order](const std::string& id) {
    auto it = gold_order.find(id);
    return it == gold_order.end() ? 0 : it->second;  // the query ranks first
  };
  const int g = gold_order.at(candidate_id);
  int slot = 0;
  for (const auto& id : partial) {
    if (rank_of(id) < g) ++slot;
  }
  return slot;
}

double marginal_loss_comp(const Eigen::VectorXd& dist, const std::vector<int>& correct) {
  if (correct.empty()) throw DataError("supervision error: empty correct set");
  double mass = 0.0;
  for (int j : correct) mass += dist(j);
  return -std::log(mass);
}

double marginal_loss_pairs(const Eigen::MatrixXd& grid,
                           const std::vector<std::pair<int, int>>& correct) {
  if (correct.empty()) throw DataError("supervision error: empty correct set");
  const double m = grid.maxCoeff();
  const double all = std::log((grid.array() - m).exp().sum());
  double num = 0.0;
  for (const auto& [k, j] : correct) num += std::exp(grid(k, j) - m);
  return all - std::log(num);
}

std::vector<PairExample> sample_pair_examples(const Mixture& mixture, Rng& rng) {
  std::vector<std::string> members{mixture.query.id};
  for (const auto& id : gold_in_order(mixture)) members.push_back(id);
  std::vector<std::string> distractors;
  for (const auto& c : mixture.candidates) {
    if (!mixture.gold_ids.count(c.id)) distractors.push_back(c.id);
  }
  std::vector<PairExample> out;
  for (size_t i = 0; i < members.size(); ++i) {
    for (size_t j = i + 1; j < members.size(); ++j) {
      out.push_back({members[i], members[j], 1.0});
      if (!distractors.empty()) {
        out.push_back({members[rng.below(members.size())],
                       distractors[rng.below(distractors.size())], 0.0});
      }
    }
  }
  return out;
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(const std::vector<std::pair<std::string, Eigen::MatrixXd*>>& params,
                const std::map<std::string, Eigen::MatrixXd>& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Eigen::MatrixXd& g = git->second;
    auto m = m_.try_emplace(name, Eigen::MatrixXd::Zero(p->rows(), p->cols())).first;
    auto v = v_.try_emplace(name, Eigen::MatrixXd::Zero(p->rows(), p->cols())).first;
    m->second = beta1_ * m->second + (1.0 - beta1_) * g;
    v->second = beta2_ * v->second + (1.0 - beta2_) * g.cwiseProduct(g);
    p->array() -= lr_ * (m->second.array() / c1) / ((v->second.array() / c2).sqrt() + eps_);
  }
}

BoundModel bind_model(const ModelParams& params, bool trainable) {
  BoundModel bm;
  std::unordered_map<std::string, ad::Var> lookup;
  if (trainable) {
    for (const auto& [name, mat] : params.named()) {
      ad::Var v = ad::leaf(*mat);
      lookup.emplace(name, v);
      bm.leaves.emplace_back(name, v);
    }
  }
  auto get = [&lookup](const char* name, const Eigen::MatrixXd& m) {
    auto it = lookup.find(name);
    return it != lookup.end() ? it->second : ad::constant(m);
  };
  bm.encoder.input_dim = params.encoder.input_dim;
  bm.encoder.hidden = params.encoder.hidden;
  bm.encoder.w_fwd = get("encoder.w_fwd", params.encoder.w_fwd);
  bm.encoder.r_fwd = get("encoder.r_fwd", params.encoder.r_fwd);
  bm.encoder.b_fwd = get("encoder.b_fwd", params.encoder.b_fwd);
  bm.encoder.w_bwd = get("encoder.w_bwd", params.encoder.w_bwd);
  bm.encoder.r_bwd = get("encoder.r_bwd", params.encoder.r_bwd);
  bm.encoder.b_bwd = get("encoder.b_bwd", params.encoder.b_bwd);
  bm.attention.u = get("attention.u", params.attention.u);
  bm.attention.out_w = get("attention.out_w", params.attention.out_w);
  bm.attention.out_b = get("attention.out_b", params.attention.out_b);
  bm.insertion.w = get("insertion.w", params.insertion.w);
  bm.relation.v = get("relation.v", params.relation.v);
  bm.relation.out_w = get("relation.out_w", params.relation.out_w);
  bm.relation.out_b = get("relation.out_b", params.relation.out_b);
  bm.relation.width = params.relation.width;
  bm.relation.normalize = params.relation.normalize;
  bm.pairwise.w1 = get("pairwise.w1", params.pairwise.w1);
  bm.pairwise.b1 = get("pairwise.b1", params.pairwise.b1);
  bm.pairwise.w2 = get("pairwise.w2", params.pairwise.w2);
  bm.pairwise.b2 = get("pairwise.b2", params.pairwise.b2);
  bm.end_embedding = get("end_embedding", params.end_embedding);
  return bm;
}

ad::Var example_loss_graph(const Mixture& mixture, const TrainExample& ex, const BoundModel& bm,
                           const ModelConfig& config, const EmbeddingProvider& provider) {
  const bool with_end = config.mode == TermMode::kDynamic;
  if (!with_end && ex.terminal) {
    throw DataError("terminal example under fixed termination mode");
  }

  auto encode_id = [&](const std::string& id, ad::Var* words_out) {
    const Sentence& s = sentence_by_id(mixture, id);
    ad::Var words = ad::constant(embed_tokens(s, provider));
    if (words_out) *words_out = words;
    return encode_sentence_graph(words, bm.encoder);
  };

  std::vector<ad::Var> t_vecs, c_vecs;
  std::vector<ad::Var> t_words, c_words;
  for (const auto& id : ex.partial) {
    ad::Var w;
    t_vecs.push_back(encode_id(id, &w));
    t_words.push_back(w);
  }
  for (const auto& id : ex.pool) {
    ad::Var w;
    c_vecs.push_back(encode_id(id, &w));
    c_words.push_back(w);
  }
  Eigen::Index end_col = -1;
  if (with_end) {
    ad::Var end_words = ad::transpose(bm.end_embedding);  // 1 x d pseudo-sentence
    c_vecs.push_back(encode_sentence_graph(end_words, bm.encoder));
    c_words.push_back(end_words);
    end_col = static_cast<Eigen::Index>(c_vecs.size()) - 1;
  }

  CompGraph comp = comp_graph(t_vecs, c_vecs, bm.attention);

  if (config.head == HeadType::kComp) {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> correct;
    if (ex.terminal) {
      correct.emplace_back(end_col, 0);
    } else {
      for (size_t j = 0; j < ex.pool.size(); ++j) {
        if (ex.remaining_gold.count(ex.pool[j])) {
          correct.emplace_back(static_cast<Eigen::Index>(j), 0);
        }
      }
    }
    if (correct.empty()) throw DataError("supervision error: empty correct set");
    return ad::sub(ad::logsumexp(comp.logits), ad::logsumexp(ad::gather(comp.logits, correct)));
  }

  ad::Var grid = insertion_grid_graph(t_vecs, c_vecs, comp, bm.insertion);
  if (config.head == HeadType::kCompInsRn) {
    std::vector<ad::Var> t_aggs, c_aggs;
    for (const auto& w : t_words) t_aggs.push_back(word_aggregate(w, bm.relation.normalize));
    for (const auto& w : c_words) c_aggs.push_back(word_aggregate(w, bm.relation.normalize));
    grid = fuse_grid(grid, relation_graph(t_aggs, c_aggs, bm.relation));
  }

  const Eigen::Index last_row = grid.rows() - 1;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> correct;
  if (ex.terminal) {
    correct.emplace_back(last_row, end_col);
  } else {
    for (size_t j = 0; j < ex.pool.size(); ++j) {
      if (ex.remaining_gold.count(ex.pool[j])) {
        correct.emplace_back(correct_slot(mixture.gold_order, ex.partial, ex.pool[j]),
                             static_cast<Eigen::Index>(j));
      }
    }
  }
  if (correct.empty()) throw DataError("supervision error: empty correct set");

  if (!with_end) {
    return ad::sub(ad::logsumexp(grid), ad::logsumexp(ad::gather(grid, correct)));
  }
  // <end> competes through its terminal append slot only; every other
  // cell of its column stays out of the pair softmax.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> valid;
  for (Eigen::Index k = 0; k <= last_row; ++k) {
    for (Eigen::Index j = 0; j < end_col; ++j) valid.emplace_back(k, j);
  }
  valid.emplace_back(last_row, end_col);
  return ad::sub(ad::logsumexp(ad::gather(grid, valid)),
                 ad::logsumexp(ad::gather(grid, correct)));
}

ad::Var pair_loss_graph(const Mixture& mixture, const PairExample& ex, const BoundModel& bm,
                        const EmbeddingProvider& provider) {
  auto encode_id = [&](const std::string& id) {
    const Sentence& s = sentence_by_id(mixture, id);
    return encode_sentence_graph(ad::constant(embed_tokens(s, provider)), bm.encoder);
  };
  ad::Var logit = pairwise_logit_graph(encode_id(ex.a), encode_id(ex.b), bm.pairwise);
  return ad::bce_with_logit(logit, ex.label);
}

TrainResult train(const std::vector<Mixture>& train_mixtures,
                  const std::vector<Mixture>& dev_mixtures, const TrainConfig& config,
                  const ModelParams* init, std::ostream* log_stream) {
  if (train_mixtures.empty()) throw DataError("train: no training mixtures");
  if (config.epochs < 1 || config.lr < 0.0) {
    throw ConfigError("train: epochs must be >= 1 and lr >= 0");
  }
  if (config.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");

  ModelConfig mc = config_from_train(config);
  ModelParams params = init ? *init : init_model_params(mc, config.seed);
  if (init) {
    if (init->config.head != mc.head || init->config.embed_dim != mc.embed_dim ||
        init->config.hidden != mc.hidden) {
      throw ConfigError("initial checkpoint is incompatible with the training config");
    }
    params.config.mode = mc.mode;
  }
  auto provider = make_provider(params.config.provider);
  const bool pairwise = config.head == HeadType::kPairwise;

  Adam optimizer(config.lr);
  auto named = params.named();

  TrainResult result;
  result.params = params;

  // Teacher-forced states (or sentence pairs), resampled per epoch unless
  // pinned by config.
  std::vector<std::vector<TrainExample>> states(train_mixtures.size());
  std::vector<std::vector<PairExample>> pair_states(train_mixtures.size());
  std::vector<std::vector<TrainExample>> dev_states(dev_mixtures.size());
  std::vector<std::vector<PairExample>> dev_pairs(dev_mixtures.size());
  {
    Rng dev_rng(mix_seed(config.seed, 0x0de7));
    for (size_t i = 0; i < dev_mixtures.size(); ++i) {
      if (pairwise) {
        dev_pairs[i] = sample_pair_examples(dev_mixtures[i], dev_rng);
      } else {
        dev_states[i] = sample_teacher_states(dev_mixtures[i], dev_rng, config.mode);
      }
    }
  }

  auto example_loss = [&](const BoundModel& bm, const Mixture& m, size_t state_idx,
                          const std::vector<TrainExample>& sts,
                          const std::vector<PairExample>& prs) {
    return pairwise ? pair_loss_graph(m, prs[state_idx], bm, *provider)
                    : example_loss_graph(m, sts[state_idx], bm, params.config, *provider);
  };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    if (epoch == 1 || config.resample_states) {
      Rng srng(mix_seed(config.seed, config.resample_states ? static_cast<uint64_t>(epoch) : 0));
      for (size_t i = 0; i < train_mixtures.size(); ++i) {
        if (pairwise) {
          pair_states[i] = sample_pair_examples(train_mixtures[i], srng);
        } else {
          states[i] = sample_teacher_states(train_mixtures[i], srng, config.mode);
        }
      }
    }
    std::vector<ExampleRef> refs;
    for (size_t i = 0; i < train_mixtures.size(); ++i) {
      size_t n = pairwise ? pair_states[i].size() : states[i].size();
      for (size_t s = 0; s < n; ++s) refs.push_back({i, s});
    }
    Rng order_rng(mix_seed(config.seed ^ 0x5a5a5a5aull, static_cast<uint64_t>(epoch)));
    order_rng.shuffle(refs);

    double loss_sum = 0.0;
    size_t cursor = 0;
    while (cursor < refs.size()) {
      size_t batch_n = std::min<size_t>(config.batch_size, refs.size() - cursor);
      BoundModel bm = bind_model(params, /*trainable=*/true);
      ad::Var batch_loss;
      for (size_t b = 0; b < batch_n; ++b) {
        const ExampleRef& ref = refs[cursor + b];
        const Mixture& m = train_mixtures[ref.mixture];
        ad::Var loss = example_loss(bm, m, ref.state, states[ref.mixture],
                                    pair_states[ref.mixture]);
        loss_sum += finite_or_throw(loss.scalar(), m);
        batch_loss = b == 0 ? loss : ad::add(batch_loss, loss);
      }
      ad::backward(ad::scale(batch_loss, 1.0 / static_cast<double>(batch_n)));
      std::map<std::string, Eigen::MatrixXd> grads;
      for (const auto& [name, leaf] : bm.leaves) {
        if (leaf.node()->grad.size() > 0) grads.emplace(name, leaf.node()->grad);
      }
      optimizer.step(named, grads);
      cursor += batch_n;
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(refs.size());

    if (!dev_mixtures.empty()) {
      BoundModel frozen = bind_model(params, /*trainable=*/false);
      double dev_sum = 0.0;
      size_t dev_n = 0;
      for (size_t i = 0; i < dev_mixtures.size(); ++i) {
        size_t n = pairwise ? dev_pairs[i].size() : dev_states[i].size();
        for (size_t s = 0; s < n; ++s) {
          dev_sum += finite_or_throw(
              example_loss(frozen, dev_mixtures[i], s, dev_states[i], dev_pairs[i]).scalar(),
              dev_mixtures[i]);
          ++dev_n;
        }
      }
      log.dev_loss = dev_n > 0 ? dev_sum / static_cast<double>(dev_n) : 0.0;

      DecodeFn decode =
          pairwise
              ? make_decode_fn("pairwise", &params, *provider, TermMode::kFixed, config.seed)
              : make_decode_fn(to_string(config.head), &params, *provider, config.mode,
                               config.seed);
      log.dev_f1 = evaluate(dev_mixtures, decode, config.jobs).macro_f1;
      if (result.best_epoch < 0 || log.dev_f1 > result.best_dev_f1) {
        result.best_epoch = epoch;
        result.best_dev_f1 = log.dev_f1;
        result.params = params;
      }
    } else {
      result.best_epoch = epoch;
      result.params = params;
    }

    log.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(log);
    if (log_stream) {
      nlohmann::ordered_json j{{"epoch", log.epoch},
                               {"train_loss", log.train_loss},
                               {"dev_loss", log.dev_loss},
                               {"dev_f1", log.dev_f1},
                               {"seconds", log.seconds}};
      (*log_stream) << j.dump() << "\n" << std::flush;
    }
  }
  return result;
}

}  // namespace scn
