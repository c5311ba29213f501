#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "csgen/lm.hpp"
#include "csgen/synth.hpp"

using namespace csgen;

namespace {

std::vector<IdSeq> toy_sequences(std::size_t corpus_size, std::uint64_t seed,
                                 Vocabulary* vocab_out = nullptr) {
  ToySpec spec;
  spec.vocab_a_size = 15;
  spec.vocab_b_size = 15;
  spec.corpus_size = corpus_size;
  spec.min_sentence_len = 3;
  spec.max_sentence_len = 7;
  spec.seed = seed;
  ToyData toy = generate_toy(spec);
  Vocabulary vocab = build_vocab({&toy.mono, &toy.cs_target}, 1);
  std::vector<IdSeq> out;
  for (const Sentence& s : toy.mono.sentences) out.push_back(encode(s, vocab, false));
  if (vocab_out) *vocab_out = vocab;
  return out;
}

LmConfig small_config(std::size_t vocab, std::uint64_t seed) {
  LmConfig cfg;
  cfg.vocab = vocab;
  cfg.embed = 24;
  cfg.hidden = 24;
  cfg.seed = seed;
  return cfg;
}

// First-order Markov chain over three symbols with explicit start and
// stop probabilities, used both to sample corpora and as the exact model.
struct BigramChain {
  // states 0..2 map to vocabulary ids 4..6
  double start[3] = {0.5, 0.3, 0.2};
  double trans[3][3] = {{0.1, 0.6, 0.3}, {0.5, 0.2, 0.3}, {0.3, 0.3, 0.4}};
  double stop[3] = {0.2, 0.3, 0.25};  // P(EOS | state)

  IdSeq sample(Rng& rng) const {
    IdSeq ids;
    int s = pick(start, rng);
    ids.push_back(4 + s);
    while (ids.size() < 30) {
      if (rng.uniform() < stop[s]) break;
      s = pick(trans[s], rng);
      ids.push_back(4 + s);
    }
    return ids;
  }

  static int pick(const double p[3], Rng& rng) {
    const double u = rng.uniform() * (p[0] + p[1] + p[2]);
    if (u < p[0]) return 0;
    if (u < p[0] + p[1]) return 1;
    return 2;
  }
};

// Count-based bigram model with BOS/EOS events, fit on one corpus and
// scored on another.
double bigram_oracle_ppl(const std::vector<IdSeq>& train, const std::vector<IdSeq>& eval) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> counts;
  std::map<std::uint32_t, double> totals;
  auto observe = [&](std::uint32_t prev, std::uint32_t next) {
    counts[{prev, next}] += 1.0;
    totals[prev] += 1.0;
  };
  for (const IdSeq& ids : train) {
    std::uint32_t prev = Vocabulary::kBos;
    for (std::uint32_t id : ids) {
      observe(prev, id);
      prev = id;
    }
    observe(prev, Vocabulary::kEos);
  }
  double total_nll = 0.0;
  std::size_t tokens = 0;
  for (const IdSeq& ids : eval) {
    std::uint32_t prev = Vocabulary::kBos;
    auto score = [&](std::uint32_t next) {
      const double c = counts.count({prev, next}) ? counts[{prev, next}] : 0.0;
      REQUIRE(c > 0.0);  // the chain makes every event reachable
      total_nll += -std::log(c / totals[prev]);
      ++tokens;
      prev = next;
    };
    for (std::uint32_t id : ids) score(id);
    score(Vocabulary::kEos);
  }
  return std::exp(total_nll / static_cast<double>(tokens));
}

}  // namespace

TEST_CASE("zero-initialized model is exactly uniform") {
  for (std::size_t layers : {std::size_t{1}, std::size_t{2}}) {
    LmConfig cfg;
    cfg.vocab = 10;
    cfg.embed = 8;
    cfg.hidden = 8;
    cfg.layers = layers;
    cfg.init_scale = 0.0;
    cfg.seed = 1;
    LanguageModel model(cfg);
    std::vector<IdSeq> corpus = {{4, 5, 6}, {7, 8}, {9}};
    PerplexityReport r = perplexity(model, corpus, "uniform");
    CHECK(std::abs(r.ppl - 10.0) < 1e-9);
    CHECK(r.token_count == 9);  // each sentence scores len + 1
    CHECK(r.ppl >= 1.0);
  }
}

TEST_CASE("a converged model on one repeated sentence approaches PPL 1") {
  std::vector<IdSeq> corpus(40, IdSeq{4, 4, 4, 4, 4});
  LanguageModel model(small_config(6, 2));
  LmTrainConfig tc;
  tc.epochs = 120;
  tc.batch = 8;
  tc.lr = 5e-3;
  tc.seed = 3;
  train_lm(model, corpus, tc);
  PerplexityReport r = perplexity(model, corpus, "repeat");
  CHECK(r.ppl >= 1.0);
  CHECK(r.ppl <= 1.05);
}

TEST_CASE("heldout PPL matches a count-based bigram oracle within 5%") {
  BigramChain chain;
  Rng rng(4);
  std::vector<IdSeq> train, heldout;
  for (int i = 0; i < 400; ++i) train.push_back(chain.sample(rng));
  for (int i = 0; i < 200; ++i) heldout.push_back(chain.sample(rng));

  const double oracle = bigram_oracle_ppl(train, heldout);

  LanguageModel model(small_config(7, 5));
  LmTrainConfig tc;
  tc.epochs = 40;
  tc.batch = 20;
  tc.lr = 3e-3;
  tc.seed = 6;
  train_lm(model, train, tc);
  const double ppl = perplexity(model, heldout, "heldout").ppl;
  CHECK(ppl > oracle * 0.95);
  CHECK(ppl < oracle * 1.05);
}

TEST_CASE("training loss decreases over the first epochs on a toy corpus") {
  std::vector<IdSeq> corpus = toy_sequences(500, 7);
  Vocabulary vocab;
  toy_sequences(1, 7, &vocab);
  LanguageModel model(small_config(38, 8));
  LmTrainConfig tc;
  tc.epochs = 10;
  tc.batch = 20;
  tc.lr = 2e-3;
  tc.seed = 9;
  LmTrainReport r = train_lm(model, corpus, tc);
  REQUIRE(r.epoch_mean_nll.size() == 10);
  for (std::size_t e = 1; e < r.epoch_mean_nll.size(); ++e)
    CHECK(r.epoch_mean_nll[e] < r.epoch_mean_nll[e - 1]);
}

TEST_CASE("same seed reproduces identical parameters") {
  std::vector<IdSeq> corpus = toy_sequences(60, 10);
  LmTrainConfig tc;
  tc.epochs = 4;
  tc.batch = 10;
  tc.seed = 11;
  LanguageModel a(small_config(40, 12));
  train_lm(a, corpus, tc);
  LanguageModel b(small_config(40, 12));
  train_lm(b, corpus, tc);
  auto pa = a.params(), pb = b.params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i)
    CHECK(pa[i]->value.data == pb[i]->value.data);
}

TEST_CASE("lr=0 leaves parameters and losses flat") {
  std::vector<IdSeq> corpus = toy_sequences(40, 13);
  LanguageModel model(small_config(40, 14));
  std::vector<double> before;
  for (nn::Parameter* p : model.params())
    before.insert(before.end(), p->value.data.begin(), p->value.data.end());
  LmTrainConfig tc;
  tc.epochs = 3;
  tc.lr = 0.0;
  tc.seed = 15;
  LmTrainReport r = train_lm(model, corpus, tc);
  std::vector<double> after;
  for (nn::Parameter* p : model.params())
    after.insert(after.end(), p->value.data.begin(), p->value.data.end());
  CHECK(before == after);
  for (double l : r.epoch_mean_nll)
    CHECK(l == doctest::Approx(r.epoch_mean_nll.front()).epsilon(1e-12));
}

TEST_CASE("perplexity is invariant to sentence order") {
  std::vector<IdSeq> corpus = toy_sequences(30, 16);
  LanguageModel model(small_config(40, 17));
  const double forward = perplexity(model, corpus, "fwd").ppl;
  std::vector<IdSeq> reversed(corpus.rbegin(), corpus.rend());
  const double backward = perplexity(model, reversed, "rev").ppl;
  CHECK(std::abs(forward - backward) < 1e-9);
}

TEST_CASE("batched masked NLL equals the sum of per-sentence NLLs") {
  std::vector<IdSeq> corpus = toy_sequences(12, 18);
  LanguageModel model(small_config(40, 19));
  nn::Tape tape;
  std::size_t scored = 0;
  const double batched = model.nll_batch(tape, corpus, &scored).value().item();
  double per_sentence = 0.0;
  std::size_t tokens = 0;
  for (const IdSeq& ids : corpus) {
    nn::Tape t2;
    per_sentence += model.nll(t2, ids).value().item();
    tokens += ids.size() + 1;
  }
  CHECK(std::abs(batched - per_sentence) < 1e-9);
  CHECK(scored == tokens);
}

TEST_CASE("augmentation with no generated text changes nothing") {
  std::vector<IdSeq> base = toy_sequences(50, 20);
  std::vector<IdSeq> heldout = toy_sequences(20, 21);
  AugmentationConfig cfg;
  cfg.model = small_config(40, 22);
  cfg.train.epochs = 5;
  cfg.train.batch = 10;
  cfg.train.seed = 23;
  AugmentationReport r = augmentation_experiment(base, {}, heldout, cfg);
  CHECK(r.baseline.ppl == r.augmented.ppl);
  CHECK(r.delta == 0.0);
}

TEST_CASE("augmenting with the heldout text itself lowers heldout PPL") {
  std::vector<IdSeq> base = toy_sequences(50, 24);
  std::vector<IdSeq> heldout = toy_sequences(40, 25);
  AugmentationConfig cfg;
  cfg.model = small_config(40, 26);
  cfg.train.epochs = 12;
  cfg.train.batch = 10;
  cfg.train.lr = 3e-3;
  cfg.train.seed = 27;
  AugmentationReport r = augmentation_experiment(base, heldout, heldout, cfg);
  CHECK(r.augmented.ppl <= r.baseline.ppl);
  CHECK(r.delta <= 0.0);
}

TEST_CASE("corpus-level experiment builds one shared vocabulary") {
  ToySpec spec;
  spec.corpus_size = 30;
  spec.seed = 28;
  ToyData toy = generate_toy(spec);
  AugmentationConfig cfg;
  cfg.model = small_config(0, 29);  // vocab filled in by the wrapper
  cfg.train.epochs = 2;
  cfg.train.batch = 10;
  cfg.train.seed = 30;
  Vocabulary vocab;
  AugmentationReport r =
      augmentation_experiment(toy.mono, toy.cs_target, toy.cs_target, cfg, &vocab);
  CHECK(vocab.size() > 4);  // beyond the reserved ids
  CHECK(r.baseline.ppl >= 1.0);
  CHECK(r.augmented.ppl >= 1.0);
}

TEST_CASE("invalid inputs are rejected") {
  LmConfig bad;
  bad.vocab = 0;
  CHECK_THROWS_AS(LanguageModel{bad}, DataError);
  LmConfig no_layers = small_config(10, 31);
  no_layers.layers = 0;
  CHECK_THROWS_AS(LanguageModel{no_layers}, DataError);

  LanguageModel model(small_config(10, 32));
  LmTrainConfig tc;
  CHECK_THROWS_AS(train_lm(model, {}, tc), DataError);
  CHECK_THROWS_AS(perplexity(model, std::vector<IdSeq>{}, "x"), DataError);
  std::vector<IdSeq> bad_ids = {{42}};
  CHECK_THROWS_AS(perplexity(model, bad_ids, "x"), DataError);
}

TEST_CASE("presets match the published configurations") {
  auto [wc, wt] = word_preset(100, 1);
  CHECK(wc.layers == 1);
  CHECK(wt.batch == 20);
  auto [cc, ct] = character_preset(100, 1);
  CHECK(cc.layers == 2);
  CHECK(ct.batch == 256);
}
