#pragma once

#include <algorithm>
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

struct Seq2SeqConfig {
  std::size_t vocab = 0;
  std::size_t embed = 64;   // paper-scale preset: 300
  std::size_t hidden = 64;  // paper-scale preset: 650
  double init_scale = 0.08;
  std::uint64_t seed = 0;
  std::string name = "s2s";
};

struct DecodeResult {
  IdSeq ids;                     // BOS stripped, EOS not included
  std::vector<double> logprobs;  // one per decode step, including the stop step
};

// Soft decoding output: one distribution over the vocabulary per step,
// differentiable back into the generator.
struct SoftDecode {
  std::vector<nn::Var> probs;  // each [1,V]
};

// Encoder-decoder over a shared vocabulary. The decoder starts from the
// encoder's final (h, c); there is no attention. Encoder consumes
// [x..., EOS], decoder is teacher-forced on [BOS, y...] against
// [y..., EOS].
class Seq2SeqModel {
 public:
  explicit Seq2SeqModel(Seq2SeqConfig cfg)
      : cfg_(std::move(cfg)),
        embedding_(cfg_.name + ".embedding", cfg_.vocab, cfg_.embed),
        encoder_(cfg_.name + ".encoder", cfg_.embed, cfg_.hidden),
        decoder_(cfg_.name + ".decoder", cfg_.embed, cfg_.hidden),
        proj_w_(cfg_.name + ".proj_w", cfg_.hidden, cfg_.vocab),
        proj_b_(cfg_.name + ".proj_b", 1, cfg_.vocab) {
    if (cfg_.vocab < 5) throw DataError("seq2seq vocab must include reserved ids");
    Rng rng(derive_seed(cfg_.seed, "init:" + cfg_.name));
    embedding_.init_uniform(rng, cfg_.init_scale);
    encoder_.init(rng, cfg_.init_scale);
    decoder_.init(rng, cfg_.init_scale);
    proj_w_.init_uniform(rng, cfg_.init_scale);
    proj_b_.value.fill(0.0);
  }

  const Seq2SeqConfig& config() const { return cfg_; }

  std::vector<nn::Parameter*> params() {
    std::vector<nn::Parameter*> ps = {&embedding_, &proj_w_, &proj_b_};
    for (auto* p : encoder_.params()) ps.push_back(p);
    for (auto* p : decoder_.params()) ps.push_back(p);
    return ps;
  }

  // --- encoding -----------------------------------------------------------

  nn::LstmCell::State encode(nn::Tape& tape, std::span<const std::uint32_t> x) const {
    auto s = encoder_.initial(tape, 1);
    for (std::uint32_t id : x) s = encoder_.step(tape, embed(tape, {id}), s);
    return encoder_.step(tape, embed(tape, {Vocabulary::kEos}), s);
  }

  // Encoder over soft inputs: expected embeddings of per-step
  // distributions, then the hard EOS step.
  nn::LstmCell::State encode_soft(nn::Tape& tape, const std::vector<nn::Var>& probs) const {
    auto s = encoder_.initial(tape, 1);
    for (const nn::Var& p : probs)
      s = encoder_.step(tape, nn::matmul(p, tape.param(embedding_)), s);
    return encoder_.step(tape, embed(tape, {Vocabulary::kEos}), s);
  }

  // --- scoring ------------------------------------------------------------

  // Teacher-forced negative log likelihood of one (x, y) pair; sum over
  // target positions, or mean per token.
  nn::Var nll(nn::Tape& tape, std::span<const std::uint32_t> x,
              std::span<const std::uint32_t> y, bool mean_per_token = false) const {
    check_ids(x);
    check_ids(y);
    return decode_nll(tape, encode(tape, x), y, mean_per_token);
  }

  nn::Var nll_given_state(nn::Tape& tape, nn::LstmCell::State v,
                          std::span<const std::uint32_t> y, bool mean_per_token = false) const {
    check_ids(y);
    return decode_nll(tape, v, y, mean_per_token);
  }

  // Batched teacher-forced NLL with PAD masking; exactly equal to the sum
  // of per-pair NLLs. Also reports the number of scored target tokens.
  nn::Var nll_batch(nn::Tape& tape, std::span<const std::pair<IdSeq, IdSeq>> pairs,
                    std::size_t* token_count = nullptr) const {
    if (pairs.empty()) throw DataError("nll_batch: empty batch");
    const std::size_t B = pairs.size();
    std::size_t x_max = 0, y_max = 0;
    for (const auto& [x, y] : pairs) {
      check_ids(x);
      check_ids(y);
      x_max = std::max(x_max, x.size());
      y_max = std::max(y_max, y.size());
    }

    // encoder over [x..., EOS], frozen past each row's end
    auto s = encoder_.initial(tape, B);
    for (std::size_t t = 0; t <= x_max; ++t) {
      IdSeq column(B, Vocabulary::kPad);
      std::vector<double> mask(B, 0.0);
      for (std::size_t b = 0; b < B; ++b) {
        const IdSeq& x = pairs[b].first;
        if (t < x.size()) {
          column[b] = x[t];
          mask[b] = 1.0;
        } else if (t == x.size()) {
          column[b] = Vocabulary::kEos;
          mask[b] = 1.0;
        }
      }
      s = encoder_.step_masked(tape, embed(tape, column), s, mask);
    }

    // decoder teacher-forced on [BOS, y...] against [y..., EOS]
    nn::LstmCell::State d{s.h, s.c};
    nn::Var total = tape.scalar(0.0);
    std::size_t counted = 0;
    for (std::size_t t = 0; t <= y_max; ++t) {
      IdSeq inputs(B, Vocabulary::kPad);
      IdSeq targets(B, Vocabulary::kPad);
      for (std::size_t b = 0; b < B; ++b) {
        const IdSeq& y = pairs[b].second;
        if (t <= y.size()) inputs[b] = t == 0 ? Vocabulary::kBos : y[t - 1];
        if (t < y.size())
          targets[b] = y[t];
        else if (t == y.size())
          targets[b] = Vocabulary::kEos;
        if (t <= y.size()) ++counted;
      }
      d = decoder_.step(tape, embed(tape, inputs), d);
      nn::Var logits = project(tape, d.h);
      // rows whose target stayed PAD are past their sequence end; real PAD
      // targets cannot occur because PAD never appears in framed targets
      total = nn::add(total, nn::cross_entropy(logits, targets, Vocabulary::kPad, false));
    }
    if (token_count) *token_count = counted;
    return total;
  }

  // --- decoding -----------------------------------------------------------

  DecodeResult greedy_decode(std::span<const std::uint32_t> x, std::size_t max_len) const {
    return hard_decode(x, max_len, 0.0, nullptr);
  }

  DecodeResult sample_decode(std::span<const std::uint32_t> x, double temperature,
                             std::uint64_t seed, std::size_t max_len) const {
    Rng rng(derive_seed(seed, "decode:" + cfg_.name));
    return hard_decode(x, max_len, temperature, &rng);
  }

  // Teacher-free soft decoding: each step emits softmax probabilities and
  // feeds their expected embedding to the next step. Runs exactly `steps`
  // steps; there is no discrete stopping decision on this path.
  SoftDecode soft_decode(nn::Tape& tape, std::span<const std::uint32_t> x,
                         std::size_t steps) const {
    check_ids(x);
    auto s = encode(tape, x);
    nn::LstmCell::State d{s.h, s.c};
    nn::Var input = embed(tape, {Vocabulary::kBos});
    SoftDecode out;
    for (std::size_t t = 0; t < steps; ++t) {
      d = decoder_.step(tape, input, d);
      nn::Var probs = nn::softmax_rows(project(tape, d.h));
      out.probs.push_back(probs);
      input = nn::matmul(probs, tape.param(embedding_));
    }
    return out;
  }

  nn::LstmCell::State decoder_step(nn::Tape& tape, nn::Var input, nn::LstmCell::State s) const {
    return decoder_.step(tape, input, s);
  }

  nn::Var embed(nn::Tape& tape, IdSeq ids) const {
    return nn::embedding_rows(tape.param(embedding_), std::move(ids));
  }

  nn::Var soft_embed(nn::Tape& tape, nn::Var probs) const {
    return nn::matmul(probs, tape.param(embedding_));
  }

  nn::Var project(nn::Tape& tape, nn::Var h) const {
    return nn::add_rowvec(nn::matmul(h, tape.param(proj_w_)), tape.param(proj_b_));
  }

 private:
  void check_ids(std::span<const std::uint32_t> ids) const {
    for (std::uint32_t id : ids)
      if (id >= cfg_.vocab)
        throw DataError("token id " + std::to_string(id) + " out of vocab range " +
                        std::to_string(cfg_.vocab));
  }

  nn::Var decode_nll(nn::Tape& tape, nn::LstmCell::State v, std::span<const std::uint32_t> y,
                     bool mean_per_token) const {
    IdSeq inputs, targets;
    inputs.push_back(Vocabulary::kBos);
    inputs.insert(inputs.end(), y.begin(), y.end());
    targets.insert(targets.end(), y.begin(), y.end());
    targets.push_back(Vocabulary::kEos);

    nn::LstmCell::State d{v.h, v.c};
    nn::Var total = tape.scalar(0.0);
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      d = decoder_.step(tape, embed(tape, {inputs[t]}), d);
      total = nn::add(total, nn::cross_entropy(project(tape, d.h), {targets[t]},
                                               ~std::uint32_t{0}, false));
    }
    return mean_per_token ? nn::scale(total, 1.0 / static_cast<double>(targets.size())) : total;
  }

  DecodeResult hard_decode(std::span<const std::uint32_t> x, std::size_t max_len,
                           double temperature, Rng* rng) const {
    if (max_len < 1) throw DataError("max_len must be >= 1");
    nn::Tape tape;
    auto s = encode(tape, x);
    nn::LstmCell::State d{s.h, s.c};
    std::uint32_t prev = Vocabulary::kBos;
    DecodeResult out;
    for (std::size_t t = 0; t < max_len; ++t) {
      d = decoder_.step(tape, embed(tape, {prev}), d);
      nn::Var logits = project(tape, d.h);
      std::uint32_t pick;
      if (rng) {
        // multinomial at the given temperature; a vanishing temperature
        // collapses to argmax
        nn::Var probs = nn::softmax_rows(nn::scale(logits, 1.0 / std::max(temperature, 1e-300)));
        const double u = rng->uniform();
        double acc = 0.0;
        pick = static_cast<std::uint32_t>(cfg_.vocab - 1);
        for (std::size_t j = 0; j < cfg_.vocab; ++j) {
          acc += probs.value()(0, j);
          if (u < acc) {
            pick = static_cast<std::uint32_t>(j);
            break;
          }
        }
      } else {
        pick = 0;
        const nn::Tensor& lv = logits.value();
        for (std::size_t j = 1; j < cfg_.vocab; ++j)
          if (lv(0, j) > lv(0, pick)) pick = static_cast<std::uint32_t>(j);
      }
      // log-probability of the chosen token under the untempered model
      {
        nn::Var probs = nn::softmax_rows(logits);
        out.logprobs.push_back(std::log(std::max(probs.value()(0, pick), 1e-300)));
      }
      if (pick == Vocabulary::kEos) break;
      out.ids.push_back(pick);
      prev = pick;
    }
    return out;
  }

  Seq2SeqConfig cfg_;
  mutable nn::Parameter embedding_;
  nn::LstmCell encoder_;
  nn::LstmCell decoder_;
  mutable nn::Parameter proj_w_;
  mutable nn::Parameter proj_b_;
};

struct S2STrainConfig {
  std::size_t epochs = 30;
  std::size_t batch = 16;  // paper-scale preset: 64
  double lr = 1e-3;
  double clip = 5.0;
  std::uint64_t seed = 0;
};

struct S2STrainReport {
  std::vector<double> epoch_mean_nll;
};

// Supervised teacher-forced training on encoded pairs. Deterministic for
// a fixed seed: batch order, padding, and updates all derive from it.
inline S2STrainReport train_s2s(Seq2SeqModel& model,
                                std::span<const std::pair<IdSeq, IdSeq>> pairs,
                                const S2STrainConfig& cfg) {
  if (pairs.empty()) throw DataError("train_s2s: empty pair list");
  nn::AdamConfig ac;
  ac.lr = cfg.lr;
  nn::Adam opt(model.params(), ac);
  S2STrainReport report;
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, "batch-order", epoch));
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      std::vector<std::pair<IdSeq, IdSeq>> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(pairs[order[i]]);
      opt.zero_grad();
      nn::Tape tape;
      std::size_t tokens = 0;
      nn::Var total = model.nll_batch(tape, batch, &tokens);
      nn::Var loss = nn::scale(total, 1.0 / static_cast<double>(tokens));
      tape.backward(loss);
      nn::clip_grad_norm(opt.params(), cfg.clip);
      opt.step();
      epoch_loss += total.value().item();
      epoch_tokens += tokens;
    }
    report.epoch_mean_nll.push_back(epoch_loss / static_cast<double>(epoch_tokens));
  }
  return report;
}

// Encodes sentence pairs with a shared vocabulary, unframed; framing is a
// model-internal concern.
inline std::vector<std::pair<IdSeq, IdSeq>> encode_pairs(
    std::span<const std::pair<Sentence, Sentence>> pairs, const Vocabulary& vocab) {
  std::vector<std::pair<IdSeq, IdSeq>> out;
  out.reserve(pairs.size());
  for (const auto& [src, tgt] : pairs)
    out.emplace_back(encode(src, vocab, false), encode(tgt, vocab, false));
  return out;
}

}  // namespace csgen
