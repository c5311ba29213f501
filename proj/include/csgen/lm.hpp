#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csgen/corpus.hpp"
#include "csgen/lstm.hpp"
#include "csgen/optim.hpp"
#include "csgen/rng.hpp"
#include "csgen/tape.hpp"

namespace csgen {

using IdSeq = std::vector<std::uint32_t>;

enum class UnitMode { Word, Character };

struct LmConfig {
  std::size_t vocab = 0;
  std::size_t embed = 64;   // paper-scale preset: 300
  std::size_t hidden = 64;  // paper-scale preset: 650
  std::size_t layers = 1;
  double init_scale = 0.08;
  std::uint64_t seed = 0;
  std::string name = "lm";
};

struct LmTrainConfig {
  std::size_t epochs = 10;
  std::size_t batch = 20;
  double lr = 1e-3;
  double clip = 5.0;
  std::uint64_t seed = 0;
};

// Word-unit LM preset: one recurrent layer, batch 20.
inline std::pair<LmConfig, LmTrainConfig> word_preset(std::size_t vocab, std::uint64_t seed) {
  LmConfig cfg;
  cfg.vocab = vocab;
  cfg.layers = 1;
  cfg.seed = seed;
  LmTrainConfig tc;
  tc.batch = 20;
  tc.seed = seed;
  return {cfg, tc};
}

// Character-unit (subword-analog) LM preset: two layers, batch 256.
inline std::pair<LmConfig, LmTrainConfig> character_preset(std::size_t vocab,
                                                           std::uint64_t seed) {
  LmConfig cfg;
  cfg.vocab = vocab;
  cfg.layers = 2;
  cfg.seed = seed;
  LmTrainConfig tc;
  tc.batch = 256;
  tc.seed = seed;
  return {cfg, tc};
}

// Next-token recurrent LM: embedding, a stack of LSTM layers, and a
// projection back to the vocabulary. init_scale = 0 zeroes every weight,
// which makes the output distribution exactly uniform.
class LanguageModel {
 public:
  explicit LanguageModel(LmConfig cfg)
      : cfg_(std::move(cfg)),
        embedding_(cfg_.name + ".embedding", cfg_.vocab, cfg_.embed),
        proj_w_(cfg_.name + ".proj_w", cfg_.hidden, cfg_.vocab),
        proj_b_(cfg_.name + ".proj_b", 1, cfg_.vocab) {
    if (cfg_.vocab == 0) throw DataError("language model needs a non-empty vocabulary");
    if (cfg_.layers == 0) throw DataError("language model needs at least one layer");
    stack_.reserve(cfg_.layers);
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      const std::size_t in = l == 0 ? cfg_.embed : cfg_.hidden;
      stack_.emplace_back(cfg_.name + ".lstm" + std::to_string(l), in, cfg_.hidden);
    }
    Rng rng(derive_seed(cfg_.seed, "init:" + cfg_.name));
    embedding_.init_uniform(rng, cfg_.init_scale);
    for (auto& cell : stack_) cell.init(rng, cfg_.init_scale);
    proj_w_.init_uniform(rng, cfg_.init_scale);
    proj_b_.value.fill(0.0);
  }

  const LmConfig& config() const { return cfg_; }

  std::vector<nn::Parameter*> params() {
    std::vector<nn::Parameter*> ps = {&embedding_, &proj_w_, &proj_b_};
    for (auto& cell : stack_)
      for (auto* p : cell.params()) ps.push_back(p);
    return ps;
  }

  // Teacher-forced NLL of one sentence: inputs [BOS, y...] predict
  // [y..., EOS], so EOS is scored and BOS never is.
  nn::Var nll(nn::Tape& tape, std::span<const std::uint32_t> ids,
              bool mean_per_token = false) const {
    check_ids(ids);
    std::vector<nn::LstmCell::State> states;
    for (const auto& cell : stack_) states.push_back(cell.initial(tape, 1));
    nn::Var loss = tape.scalar(0.0);
    std::uint32_t input = Vocabulary::kBos;
    for (std::size_t t = 0; t <= ids.size(); ++t) {
      const std::uint32_t target = t < ids.size() ? ids[t] : Vocabulary::kEos;
      nn::Var logits = step(tape, {input}, states, nullptr);
      loss = nn::add(loss, nn::cross_entropy(logits, {target}, ~0u, false));
      input = target;
    }
    if (mean_per_token) loss = nn::scale(loss, 1.0 / static_cast<double>(ids.size() + 1));
    return loss;
  }

  // Summed PAD-masked NLL over a batch; token_count receives the number
  // of scored positions (each sentence contributes len + 1).
  nn::Var nll_batch(nn::Tape& tape, std::span<const IdSeq> batch,
                    std::size_t* token_count = nullptr) const {
    if (batch.empty()) throw DataError("nll_batch: empty batch");
    std::size_t max_len = 0;
    for (const IdSeq& ids : batch) {
      check_ids(ids);
      max_len = std::max(max_len, ids.size());
    }
    const std::size_t B = batch.size();
    std::vector<nn::LstmCell::State> states;
    for (const auto& cell : stack_) states.push_back(cell.initial(tape, B));
    nn::Var loss = tape.scalar(0.0);
    std::size_t scored = 0;
    std::vector<std::uint32_t> inputs(B, Vocabulary::kBos);
    for (std::size_t t = 0; t <= max_len; ++t) {
      std::vector<std::uint32_t> targets(B, Vocabulary::kPad);
      std::vector<double> mask(B, 0.0);
      for (std::size_t b = 0; b < B; ++b) {
        if (t < batch[b].size()) {
          targets[b] = batch[b][t];
        } else if (t == batch[b].size()) {
          targets[b] = Vocabulary::kEos;
        } else {
          continue;
        }
        mask[b] = 1.0;
        ++scored;
      }
      nn::Var logits = step(tape, inputs, states, &mask);
      loss = nn::add(loss, nn::cross_entropy(logits, targets, Vocabulary::kPad, false));
      for (std::size_t b = 0; b < B; ++b)
        inputs[b] = mask[b] > 0.0 ? targets[b] : Vocabulary::kPad;
    }
    if (token_count) *token_count = scored;
    return loss;
  }

 private:
  nn::Var step(nn::Tape& tape, const std::vector<std::uint32_t>& inputs,
               std::vector<nn::LstmCell::State>& states,
               const std::vector<double>* mask) const {
    nn::Var x = nn::embedding_rows(tape.param(embedding_), inputs);
    for (std::size_t l = 0; l < stack_.size(); ++l) {
      states[l] = mask ? stack_[l].step_masked(tape, x, states[l], *mask)
                       : stack_[l].step(tape, x, states[l]);
      x = states[l].h;
    }
    return nn::add_rowvec(nn::matmul(x, tape.param(proj_w_)), tape.param(proj_b_));
  }

  void check_ids(std::span<const std::uint32_t> ids) const {
    for (std::uint32_t id : ids)
      if (id >= cfg_.vocab) throw DataError("token id out of vocabulary range");
  }

  LmConfig cfg_;
  mutable nn::Parameter embedding_;
  std::vector<nn::LstmCell> stack_;
  mutable nn::Parameter proj_w_;
  mutable nn::Parameter proj_b_;
};

struct LmTrainReport {
  std::vector<double> epoch_mean_nll;
};

inline LmTrainReport train_lm(LanguageModel& model, std::span<const IdSeq> corpus,
                              const LmTrainConfig& cfg) {
  if (corpus.empty()) throw DataError("train_lm: empty corpus");
  nn::AdamConfig ac;
  ac.lr = cfg.lr;
  nn::Adam opt(model.params(), ac);
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  LmTrainReport report;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, "lm:batch-order", epoch));
    rng.shuffle(order);
    double total = 0.0;
    std::size_t tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(start + cfg.batch, order.size());
      std::vector<IdSeq> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(corpus[order[i]]);
      opt.zero_grad();
      nn::Tape tape;
      std::size_t scored = 0;
      nn::Var sum = model.nll_batch(tape, batch, &scored);
      nn::Var loss = nn::scale(sum, 1.0 / static_cast<double>(scored));
      tape.backward(loss);
      nn::clip_grad_norm(opt.params(), cfg.clip);
      opt.step();
      total += sum.value().item();
      tokens += scored;
    }
    report.epoch_mean_nll.push_back(total / static_cast<double>(tokens));
  }
  return report;
}

inline LanguageModel train_lm(const Corpus& corpus, const Vocabulary& vocab,
                              const LmConfig& cfg, const LmTrainConfig& train_cfg) {
  std::vector<IdSeq> sequences;
  sequences.reserve(corpus.size());
  for (const Sentence& s : corpus.sentences) sequences.push_back(encode(s, vocab, false));
  LanguageModel model(cfg);
  train_lm(model, sequences, train_cfg);
  return model;
}

struct PerplexityReport {
  std::string corpus_name;
  std::size_t token_count = 0;
  double mean_nll = 0.0;
  double ppl = 1.0;
};

// exp of the token-mean NLL; EOS is counted, BOS and PAD are not.
inline PerplexityReport perplexity(const LanguageModel& model, std::span<const IdSeq> corpus,
                                   const std::string& name = "") {
  if (corpus.empty()) throw DataError("perplexity: empty corpus");
  double total = 0.0;
  std::size_t tokens = 0;
  for (const IdSeq& ids : corpus) {
    nn::Tape tape;
    total += model.nll(tape, ids).value().item();
    tokens += ids.size() + 1;
  }
  PerplexityReport report;
  report.corpus_name = name;
  report.token_count = tokens;
  report.mean_nll = total / static_cast<double>(tokens);
  report.ppl = std::exp(report.mean_nll);
  return report;
}

inline PerplexityReport perplexity(const LanguageModel& model, const Corpus& corpus,
                                   const Vocabulary& vocab) {
  std::vector<IdSeq> sequences;
  sequences.reserve(corpus.size());
  for (const Sentence& s : corpus.sentences) sequences.push_back(encode(s, vocab, false));
  return perplexity(model, sequences, corpus.name);
}

struct AugmentationConfig {
  LmConfig model;
  LmTrainConfig train;
};

struct AugmentationReport {
  PerplexityReport baseline;
  PerplexityReport augmented;
  double delta = 0.0;  // augmented - baseline; negative means augmentation helped
};

// Trains one LM on base and one on base+generated with the identical seed
// and schedule, so the training text is the only difference between arms.
inline AugmentationReport augmentation_experiment(std::span<const IdSeq> base,
                                                  std::span<const IdSeq> generated,
                                                  std::span<const IdSeq> heldout,
                                                  const AugmentationConfig& cfg) {
  if (base.empty()) throw DataError("augmentation_experiment: empty base corpus");
  if (heldout.empty()) throw DataError("augmentation_experiment: empty heldout corpus");

  LanguageModel baseline_model(cfg.model);
  train_lm(baseline_model, base, cfg.train);

  std::vector<IdSeq> combined(base.begin(), base.end());
  combined.insert(combined.end(), generated.begin(), generated.end());
  LanguageModel augmented_model(cfg.model);
  train_lm(augmented_model, combined, cfg.train);

  AugmentationReport report;
  report.baseline = perplexity(baseline_model, heldout, "heldout");
  report.augmented = perplexity(augmented_model, heldout, "heldout");
  report.delta = report.augmented.ppl - report.baseline.ppl;
  return report;
}

// Corpus-level wrapper: the shared vocabulary is built over the union of
// all three corpora so every arm scores the same event space.
inline AugmentationReport augmentation_experiment(const Corpus& base, const Corpus& generated,
                                                  const Corpus& heldout, AugmentationConfig cfg,
                                                  Vocabulary* vocab_out = nullptr) {
  Vocabulary vocab = build_vocab({&base, &generated, &heldout}, 1);
  auto to_ids = [&](const Corpus& c) {
    std::vector<IdSeq> out;
    out.reserve(c.size());
    for (const Sentence& s : c.sentences) out.push_back(encode(s, vocab, false));
    return out;
  };
  cfg.model.vocab = vocab.size();
  if (vocab_out) *vocab_out = vocab;
  const auto b = to_ids(base), g = to_ids(generated), h = to_ids(heldout);
  return augmentation_experiment(b, g, h, cfg);
}

}  // namespace csgen
