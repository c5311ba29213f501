#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csgen/corpus.hpp"
#include "csgen/seq2seq.hpp"

namespace csgen {

struct DiscriminatorConfig {
  std::size_t vocab = 0;
  std::size_t embed = 64;
  std::size_t hidden = 64;
  double init_scale = 0.08;
  std::uint64_t seed = 0;
  std::string name = "d";
};

// Recurrent encoder + linear head producing a single "is real" logit.
// Scores both hard token sequences (embedding lookup) and soft
// distributions over the vocabulary (expected embeddings), so the
// generator's relaxed outputs stay differentiable through it.
class Discriminator {
 public:
  explicit Discriminator(DiscriminatorConfig cfg)
      : cfg_(std::move(cfg)),
        embedding_(cfg_.name + ".embedding", cfg_.vocab, cfg_.embed),
        encoder_(cfg_.name + ".encoder", cfg_.embed, cfg_.hidden),
        head_w_(cfg_.name + ".head_w", cfg_.hidden, 1),
        head_b_(cfg_.name + ".head_b", 1, 1) {
    Rng rng(derive_seed(cfg_.seed, "init:" + cfg_.name));
    embedding_.init_uniform(rng, cfg_.init_scale);
    encoder_.init(rng, cfg_.init_scale);
    head_w_.init_uniform(rng, cfg_.init_scale);
    head_b_.value.fill(0.0);
  }

  nn::Var score_ids(nn::Tape& tape, std::span<const std::uint32_t> ids) const {
    auto s = encoder_.initial(tape, 1);
    for (std::uint32_t id : ids)
      s = encoder_.step(tape, nn::embedding_rows(tape.param(embedding_), {id}), s);
    s = encoder_.step(tape, nn::embedding_rows(tape.param(embedding_), {Vocabulary::kEos}), s);
    return head(tape, s.h);
  }

  nn::Var score_soft(nn::Tape& tape, const std::vector<nn::Var>& probs) const {
    auto s = encoder_.initial(tape, 1);
    for (const nn::Var& p : probs)
      s = encoder_.step(tape, nn::matmul(p, tape.param(embedding_)), s);
    s = encoder_.step(tape, nn::embedding_rows(tape.param(embedding_), {Vocabulary::kEos}), s);
    return head(tape, s.h);
  }

  std::vector<nn::Parameter*> params() {
    std::vector<nn::Parameter*> ps = {&embedding_, &head_w_, &head_b_};
    for (auto* p : encoder_.params()) ps.push_back(p);
    return ps;
  }

 private:
  nn::Var head(nn::Tape& tape, nn::Var h) const {
    return nn::add_rowvec(nn::matmul(h, tape.param(head_w_)), tape.param(head_b_));
  }

  DiscriminatorConfig cfg_;
  mutable nn::Parameter embedding_;
  nn::LstmCell encoder_;
  mutable nn::Parameter head_w_;
  mutable nn::Parameter head_b_;
};

struct CycleGanConfig {
  std::size_t vocab = 0;
  std::size_t embed = 64;       // paper-scale preset: 300
  std::size_t hidden = 64;      // paper-scale preset: 650
  std::size_t disc_embed = 64;
  std::size_t disc_hidden = 64;
  double lambda1 = 0.3;  // weight of the X->Y->X cycle loss
  double lambda2 = 0.8;  // weight of the Y->X->Y cycle loss
  double init_scale = 0.08;
  std::size_t soft_slack = 2;       // soft decode runs |src| + slack steps
  std::size_t max_decode_len = 32;  // hard cap on any decode
  std::uint64_t seed = 0;
};

// Per-step loss breakdown. total always equals
// adv_g + adv_f + lambda1*cyc_x + lambda2*cyc_y.
struct LossReport {
  double adv_g = 0.0;
  double adv_f = 0.0;
  double cyc_x = 0.0;
  double cyc_y = 0.0;
  double disc_x = 0.0;
  double disc_y = 0.0;
  double total = 0.0;
};

// Two generators (G: X->Y, F: Y->X) and two discriminators over one shared
// vocabulary, with independently weighted cycle-consistency losses.
class CycleGanModel {
 public:
  explicit CycleGanModel(CycleGanConfig cfg)
      : cfg_(cfg),
        g_(gen_config(cfg, "G")),
        f_(gen_config(cfg, "F")),
        d_x_(disc_config(cfg, "D_X")),
        d_y_(disc_config(cfg, "D_Y")) {
    if (cfg.lambda1 < 0.0 || cfg.lambda2 < 0.0)
      throw DataError("cycle loss weights must be non-negative");
  }

  const CycleGanConfig& config() const { return cfg_; }
  Seq2SeqModel& g() { return g_; }
  Seq2SeqModel& f() { return f_; }
  Discriminator& d_x() { return d_x_; }
  Discriminator& d_y() { return d_y_; }
  const Seq2SeqModel& g() const { return g_; }
  const Seq2SeqModel& f() const { return f_; }

  std::vector<nn::Parameter*> generator_params() {
    auto ps = g_.params();
    for (auto* p : f_.params()) ps.push_back(p);
    return ps;
  }

  std::vector<nn::Parameter*> discriminator_params() {
    auto ps = d_x_.params();
    for (auto* p : d_y_.params()) ps.push_back(p);
    return ps;
  }

  std::vector<nn::Parameter*> all_params() {
    auto ps = generator_params();
    for (auto* p : discriminator_params()) ps.push_back(p);
    return ps;
  }

  std::size_t soft_steps(std::size_t src_len) const {
    return std::min(src_len + cfg_.soft_slack, cfg_.max_decode_len);
  }

 private:
  static Seq2SeqConfig gen_config(const CycleGanConfig& cfg, const char* name) {
    Seq2SeqConfig c;
    c.vocab = cfg.vocab;
    c.embed = cfg.embed;
    c.hidden = cfg.hidden;
    c.init_scale = cfg.init_scale;
    c.seed = cfg.seed;
    c.name = name;
    return c;
  }

  static DiscriminatorConfig disc_config(const CycleGanConfig& cfg, const char* name) {
    DiscriminatorConfig c;
    c.vocab = cfg.vocab;
    c.embed = cfg.disc_embed;
    c.hidden = cfg.disc_hidden;
    c.init_scale = cfg.init_scale;
    c.seed = cfg.seed;
    c.name = name;
    return c;
  }

  CycleGanConfig cfg_;
  Seq2SeqModel g_;
  Seq2SeqModel f_;
  Discriminator d_x_;
  Discriminator d_y_;
};

// G trained on (x -> y) pairs, F on (y -> x); discriminators stay at their
// random initialization.
inline CycleGanModel pretrain(std::span<const std::pair<IdSeq, IdSeq>> pairs_xy,
                              std::span<const std::pair<IdSeq, IdSeq>> pairs_yx,
                              const CycleGanConfig& cfg, const S2STrainConfig& train_cfg) {
  if (pairs_xy.empty() || pairs_yx.empty()) throw DataError("pretrain: empty pair list");
  CycleGanModel model(cfg);
  S2STrainConfig g_cfg = train_cfg;
  g_cfg.seed = derive_seed(train_cfg.seed, "pretrain:G");
  train_s2s(model.g(), pairs_xy, g_cfg);
  S2STrainConfig f_cfg = train_cfg;
  f_cfg.seed = derive_seed(train_cfg.seed, "pretrain:F");
  train_s2s(model.f(), pairs_yx, f_cfg);
  return model;
}

// Steps from the first argmax-EOS onward are dropped, mirroring how the
// hard decoders stop at EOS; the consumer appends its own terminator.
inline std::vector<nn::Var> trim_soft_at_eos(const std::vector<nn::Var>& probs) {
  std::vector<nn::Var> kept;
  for (const nn::Var& p : probs) {
    const auto& d = p.value().data;
    std::size_t arg = 0;
    for (std::size_t j = 1; j < d.size(); ++j)
      if (d[j] > d[arg]) arg = j;
    if (arg == Vocabulary::kEos) break;
    kept.push_back(p);
  }
  return kept;
}

// Discrete surrogate of the cycle reconstruction distance: G soft-decodes
// x teacher-free, then F is teacher-forced to reconstruct x from G's
// output; the value is F's mean reconstruction cross-entropy.
inline nn::Var cycle_loss_x(nn::Tape& tape, CycleGanModel& model,
                            std::span<const std::uint32_t> x) {
  SoftDecode sd = model.g().soft_decode(tape, x, model.soft_steps(x.size()));
  auto state = model.f().encode_soft(tape, trim_soft_at_eos(sd.probs));
  return model.f().nll_given_state(tape, state, x, true);
}

inline nn::Var cycle_loss_y(nn::Tape& tape, CycleGanModel& model,
                            std::span<const std::uint32_t> y) {
  SoftDecode sd = model.f().soft_decode(tape, y, model.soft_steps(y.size()));
  auto state = model.g().encode_soft(tape, trim_soft_at_eos(sd.probs));
  return model.g().nll_given_state(tape, state, y, true);
}

// Strict relaxation of the original L1 cycle distance, for ablation: G is
// forced to emit exactly |x| soft steps and the mean L1 distance between
// the soft-embedding sequence of F(G(x)) and the embedding sequence of x
// is returned. Only defined because both legs are forced to |x| steps.
inline nn::Var cycle_loss_x_l1(nn::Tape& tape, CycleGanModel& model,
                               std::span<const std::uint32_t> x) {
  if (x.empty()) return tape.scalar(0.0);
  SoftDecode g_out = model.g().soft_decode(tape, x, x.size());
  auto state = model.f().encode_soft(tape, g_out.probs);
  // F soft-decodes from the encoded state for |x| steps
  nn::Var loss = tape.scalar(0.0);
  nn::LstmCell::State d{state.h, state.c};
  nn::Var input = model.f().embed(tape, {Vocabulary::kBos});
  for (std::size_t t = 0; t < x.size(); ++t) {
    // reuse F's decoder via one soft step: project, softmax, expected embedding
    d = model.f().decoder_step(tape, input, d);
    nn::Var probs = nn::softmax_rows(model.f().project(tape, d.h));
    nn::Var recon = model.f().soft_embed(tape, probs);
    nn::Var target = model.f().embed(tape, {x[t]});
    loss = nn::add(loss, nn::l1_loss(recon, target));
    input = recon;
  }
  return nn::scale(loss, 1.0 / static_cast<double>(x.size()));
}

enum class Domain { X, Y };

struct CycleGanTrainConfig {
  std::size_t steps = 1000;
  std::size_t d_steps_per_g = 1;
  std::size_t batch = 8;
  double lr_g = 1e-3;
  double lr_d = 1e-3;
  double clip = 5.0;
  std::uint64_t seed = 0;
};

// One discriminator update: BCE(D(real), real) + BCE(D(fake), fake) with
// fakes produced by the opposite generator on a batch from the other
// domain. Fakes are hard greedy decodes, so no gradient reaches the
// generator; only D parameters move.
inline double discriminator_step(CycleGanModel& model, std::span<const IdSeq> real_batch,
                                 std::span<const IdSeq> fake_source_batch, Domain domain,
                                 nn::Adam& opt_d) {
  if (real_batch.empty() || fake_source_batch.empty())
    throw DataError("discriminator_step: empty batch");
  Discriminator& disc = domain == Domain::X ? model.d_x() : model.d_y();
  Seq2SeqModel& opposite = domain == Domain::X ? model.f() : model.g();

  opt_d.zero_grad();
  nn::Tape tape;
  nn::Var real_loss = tape.scalar(0.0);
  for (const IdSeq& ids : real_batch)
    real_loss = nn::add(real_loss, nn::bce_with_logits(disc.score_ids(tape, ids), 1.0));
  nn::Var fake_loss = tape.scalar(0.0);
  for (const IdSeq& src : fake_source_batch) {
    const IdSeq fake =
        opposite.greedy_decode(src, model.soft_steps(src.size())).ids;
    fake_loss = nn::add(fake_loss, nn::bce_with_logits(disc.score_ids(tape, fake), 0.0));
  }
  nn::Var loss = nn::add(nn::scale(real_loss, 1.0 / real_batch.size()),
                         nn::scale(fake_loss, 1.0 / fake_source_batch.size()));
  tape.backward(loss);
  opt_d.step();
  return loss.value().item();
}

inline double combined_objective(double adv_g, double adv_f, double cyc_x, double cyc_y,
                                 double lambda1, double lambda2) {
  return adv_g + adv_f + lambda1 * cyc_x + lambda2 * cyc_y;
}

struct GeneratorObjective {
  nn::Var adv_g, adv_f, cyc_x, cyc_y, total;
};

// The full generator objective on one tape: non-saturating adversarial
// terms through the soft decoding path plus both weighted cycle losses.
inline GeneratorObjective generator_objective(nn::Tape& tape, CycleGanModel& model,
                                              std::span<const IdSeq> batch_x,
                                              std::span<const IdSeq> batch_y) {
  if (batch_x.empty() || batch_y.empty()) throw DataError("generator objective: empty batch");
  GeneratorObjective obj;
  obj.adv_g = tape.scalar(0.0);
  obj.cyc_x = tape.scalar(0.0);
  for (const IdSeq& x : batch_x) {
    SoftDecode sd = model.g().soft_decode(tape, x, model.soft_steps(x.size()));
    const auto probs = trim_soft_at_eos(sd.probs);
    obj.adv_g =
        nn::add(obj.adv_g, nn::bce_with_logits(model.d_y().score_soft(tape, probs), 1.0));
    auto state = model.f().encode_soft(tape, probs);
    obj.cyc_x = nn::add(obj.cyc_x, model.f().nll_given_state(tape, state, x, true));
  }
  obj.adv_g = nn::scale(obj.adv_g, 1.0 / batch_x.size());
  obj.cyc_x = nn::scale(obj.cyc_x, 1.0 / batch_x.size());

  obj.adv_f = tape.scalar(0.0);
  obj.cyc_y = tape.scalar(0.0);
  for (const IdSeq& y : batch_y) {
    SoftDecode sd = model.f().soft_decode(tape, y, model.soft_steps(y.size()));
    const auto probs = trim_soft_at_eos(sd.probs);
    obj.adv_f =
        nn::add(obj.adv_f, nn::bce_with_logits(model.d_x().score_soft(tape, probs), 1.0));
    auto state = model.g().encode_soft(tape, probs);
    obj.cyc_y = nn::add(obj.cyc_y, model.g().nll_given_state(tape, state, y, true));
  }
  obj.adv_f = nn::scale(obj.adv_f, 1.0 / batch_y.size());
  obj.cyc_y = nn::scale(obj.cyc_y, 1.0 / batch_y.size());

  obj.total = nn::add(nn::add(obj.adv_g, obj.adv_f),
                      nn::add(nn::scale(obj.cyc_x, model.config().lambda1),
                              nn::scale(obj.cyc_y, model.config().lambda2)));
  return obj;
}

// One generator update. D parameters are frozen: their accumulated
// gradients are never applied and are cleared by the next discriminator
// step.
inline LossReport generator_step(CycleGanModel& model, std::span<const IdSeq> batch_x,
                                 std::span<const IdSeq> batch_y, nn::Adam& opt_g,
                                 double clip = 5.0) {
  opt_g.zero_grad();
  for (nn::Parameter* p : model.discriminator_params()) p->zero_grad();

  nn::Tape tape;
  GeneratorObjective obj = generator_objective(tape, model, batch_x, batch_y);
  tape.backward(obj.total);
  nn::clip_grad_norm(opt_g.params(), clip);
  opt_g.step();

  LossReport report;
  report.adv_g = obj.adv_g.value().item();
  report.adv_f = obj.adv_f.value().item();
  report.cyc_x = obj.cyc_x.value().item();
  report.cyc_y = obj.cyc_y.value().item();
  report.total = combined_objective(report.adv_g, report.adv_f, report.cyc_x, report.cyc_y,
                                    model.config().lambda1, model.config().lambda2);
  return report;
}

// Mean token-level accuracy of the round trip F(G(x)) against x, compared
// position by position over greedy decodes.
inline double reconstruction_accuracy(CycleGanModel& model, std::span<const IdSeq> sentences) {
  std::size_t match = 0, total = 0;
  for (const IdSeq& x : sentences) {
    if (x.empty()) continue;
    const IdSeq mid = model.g().greedy_decode(x, model.soft_steps(x.size())).ids;
    const IdSeq rec = model.f().greedy_decode(mid, model.soft_steps(mid.size())).ids;
    total += x.size();
    for (std::size_t i = 0; i < std::min(x.size(), rec.size()); ++i)
      if (rec[i] == x[i]) ++match;
  }
  return total ? static_cast<double>(match) / static_cast<double>(total) : 0.0;
}

// Classification accuracy of one discriminator at the logit-0 threshold,
// with fakes greedy-decoded by the opposite generator.
inline double discriminator_accuracy(CycleGanModel& model, std::span<const IdSeq> real,
                                     std::span<const IdSeq> fake_sources, Domain domain) {
  Discriminator& disc = domain == Domain::X ? model.d_x() : model.d_y();
  Seq2SeqModel& opposite = domain == Domain::X ? model.f() : model.g();
  std::size_t correct = 0, total = 0;
  for (const IdSeq& ids : real) {
    nn::Tape tape;
    if (disc.score_ids(tape, ids).value().item() > 0.0) ++correct;
    ++total;
  }
  for (const IdSeq& src : fake_sources) {
    const IdSeq fake = opposite.greedy_decode(src, model.soft_steps(src.size())).ids;
    nn::Tape tape;
    if (disc.score_ids(tape, fake).value().item() <= 0.0) ++correct;
    ++total;
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

// Alternating adversarial training. Deterministic per seed: batch
// sampling, fake decoding, and updates all derive from it.
inline std::vector<LossReport> train_cyclegan(
    CycleGanModel& model, std::span<const IdSeq> corpus_x, std::span<const IdSeq> corpus_y,
    const CycleGanTrainConfig& cfg,
    const std::function<void(std::size_t, const LossReport&)>& on_step = {}) {
  if (corpus_x.empty() || corpus_y.empty()) throw DataError("train_cyclegan: empty corpus");
  nn::AdamConfig g_ac;
  g_ac.lr = cfg.lr_g;
  nn::Adam opt_g(model.generator_params(), g_ac);
  nn::AdamConfig d_ac;
  d_ac.lr = cfg.lr_d;
  nn::Adam opt_d(model.discriminator_params(), d_ac);

  auto sample = [](std::span<const IdSeq> corpus, std::size_t count, Rng& rng) {
    std::vector<IdSeq> batch;
    batch.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      batch.push_back(corpus[rng.uniform_index(corpus.size())]);
    return batch;
  };

  std::vector<LossReport> log;
  log.reserve(cfg.steps);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Rng rng(derive_seed(cfg.seed, "cyclegan:batch", step));
    LossReport report;
    for (std::size_t k = 0; k < cfg.d_steps_per_g; ++k) {
      report.disc_x = discriminator_step(model, sample(corpus_x, cfg.batch, rng),
                                         sample(corpus_y, cfg.batch, rng), Domain::X, opt_d);
      report.disc_y = discriminator_step(model, sample(corpus_y, cfg.batch, rng),
                                         sample(corpus_x, cfg.batch, rng), Domain::Y, opt_d);
    }
    const auto batch_x = sample(corpus_x, cfg.batch, rng);
    const auto batch_y = sample(corpus_y, cfg.batch, rng);
    LossReport gen = generator_step(model, batch_x, batch_y, opt_g, cfg.clip);
    gen.disc_x = report.disc_x;
    gen.disc_y = report.disc_y;
    log.push_back(gen);
    if (on_step) on_step(step, gen);
  }
  return log;
}

enum class DecodeMode { Greedy, Sample };

// Applies G to every sentence; output tokens are re-tagged from their
// surfaces so the generated corpus feeds straight into the CMI metrics.
inline Corpus generate(CycleGanModel& model, const Corpus& corpus_x, const Vocabulary& vocab,
                       DecodeMode mode = DecodeMode::Greedy, double temperature = 1.0,
                       std::uint64_t seed = 0) {
  Corpus out;
  out.name = corpus_x.name + "+cyclegan";
  for (std::size_t i = 0; i < corpus_x.size(); ++i) {
    const IdSeq x = encode(corpus_x.sentences[i], vocab, false);
    const std::size_t max_len = model.soft_steps(x.size());
    DecodeResult r = mode == DecodeMode::Greedy
                         ? model.g().greedy_decode(x, max_len)
                         : model.g().sample_decode(x, temperature,
                                                   derive_seed(seed, "generate", i), max_len);
    out.sentences.push_back(decode(r.ids, vocab));
  }
  return out;
}

}  // namespace csgen
