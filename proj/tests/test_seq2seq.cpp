#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "csgen/seq2seq.hpp"
#include "csgen/synth.hpp"

using namespace csgen;

namespace {

struct ToyTask {
  ToyData toy;
  Vocabulary vocab;
  std::vector<std::pair<IdSeq, IdSeq>> pairs;
};

ToyTask make_task(std::size_t corpus_size, std::uint64_t seed, double rate = 0.35) {
  ToySpec spec;
  spec.vocab_a_size = 20;
  spec.vocab_b_size = 20;
  spec.corpus_size = corpus_size;
  spec.min_sentence_len = 3;
  spec.max_sentence_len = 6;
  spec.seed = seed;
  ToyTask task;
  task.toy = generate_toy(spec);
  SubstitutionPolicy policy;
  policy.rate = rate;
  policy.seed = derive_seed(seed, "pairs");
  auto sentence_pairs = make_pairs(task.toy.mono, task.toy.lexicon, policy);
  task.vocab = build_vocab({&task.toy.mono, &task.toy.cs_target}, 1);
  task.pairs = encode_pairs(sentence_pairs, task.vocab);
  return task;
}

Seq2SeqConfig small_config(std::size_t vocab, std::uint64_t seed) {
  Seq2SeqConfig cfg;
  cfg.vocab = vocab;
  cfg.embed = 32;
  cfg.hidden = 32;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("untrained mean per-token NLL is close to ln V") {
  ToyTask task = make_task(120, 1);
  const std::size_t V = task.vocab.size();
  Seq2SeqModel model(small_config(V, 2));
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& [x, y] : task.pairs) {
    nn::Tape tape;
    total += model.nll(tape, x, y).value().item();
    tokens += y.size() + 1;
  }
  const double mean = total / static_cast<double>(tokens);
  const double lnv = std::log(static_cast<double>(V));
  CHECK(mean > lnv * 0.85);
  CHECK(mean < lnv * 1.15);
}

TEST_CASE("overfitting a single pair drives NLL below 0.01") {
  ToyTask task = make_task(1, 3);
  Seq2SeqModel model(small_config(task.vocab.size(), 4));
  S2STrainConfig tc;
  tc.epochs = 800;
  tc.batch = 1;
  tc.lr = 5e-3;
  tc.seed = 5;
  train_s2s(model, task.pairs, tc);
  nn::Tape tape;
  const double nll = model.nll(tape, task.pairs[0].first, task.pairs[0].second).value().item();
  CHECK(nll < 0.01);

  // greedy decode reproduces the target exactly
  DecodeResult r = model.greedy_decode(task.pairs[0].first, 32);
  CHECK(r.ids == task.pairs[0].second);
}

TEST_CASE("empty target scores only the EOS step") {
  ToyTask task = make_task(2, 6);
  Seq2SeqModel model(small_config(task.vocab.size(), 7));
  nn::Tape tape;
  IdSeq empty;
  const double nll = model.nll(tape, task.pairs[0].first, empty).value().item();
  CHECK(nll > 0.0);
  // equals -log P(EOS | v) by construction: one softmax term
  CHECK(nll < std::log(static_cast<double>(task.vocab.size())) * 2.0);
}

TEST_CASE("batched masked NLL equals the sum of per-pair NLLs") {
  ToyTask task = make_task(9, 8);
  Seq2SeqModel model(small_config(task.vocab.size(), 9));
  nn::Tape tape;
  nn::Var batched = model.nll_batch(tape, task.pairs);
  double per_pair = 0.0;
  for (const auto& [x, y] : task.pairs) {
    nn::Tape t2;
    per_pair += model.nll(t2, x, y).value().item();
  }
  CHECK(std::abs(batched.value().item() - per_pair) < 1e-9);
}

TEST_CASE("training decreases loss and is deterministic") {
  ToyTask task = make_task(50, 10);
  S2STrainConfig tc;
  tc.epochs = 10;
  tc.batch = 8;
  tc.lr = 3e-3;
  tc.seed = 11;

  Seq2SeqModel a(small_config(task.vocab.size(), 12));
  S2STrainReport ra = train_s2s(a, task.pairs, tc);
  CHECK(ra.epoch_mean_nll.back() < ra.epoch_mean_nll.front());

  Seq2SeqModel b(small_config(task.vocab.size(), 12));
  S2STrainReport rb = train_s2s(b, task.pairs, tc);
  REQUIRE(ra.epoch_mean_nll.size() == rb.epoch_mean_nll.size());
  for (std::size_t i = 0; i < ra.epoch_mean_nll.size(); ++i)
    CHECK(ra.epoch_mean_nll[i] == rb.epoch_mean_nll[i]);

  CHECK_THROWS_AS(train_s2s(a, {}, tc), DataError);
}

TEST_CASE("lr=0 leaves parameters and losses flat") {
  ToyTask task = make_task(20, 13);
  Seq2SeqModel model(small_config(task.vocab.size(), 14));
  std::vector<double> before;
  for (nn::Parameter* p : model.params())
    before.insert(before.end(), p->value.data.begin(), p->value.data.end());
  S2STrainConfig tc;
  tc.epochs = 3;
  tc.lr = 0.0;
  tc.seed = 15;
  S2STrainReport r = train_s2s(model, task.pairs, tc);
  std::vector<double> after;
  for (nn::Parameter* p : model.params())
    after.insert(after.end(), p->value.data.begin(), p->value.data.end());
  CHECK(before == after);
  for (double l : r.epoch_mean_nll)
    CHECK(l == doctest::Approx(r.epoch_mean_nll.front()).epsilon(1e-12));
}

TEST_CASE("sampling at vanishing temperature matches greedy") {
  ToyTask task = make_task(10, 16);
  Seq2SeqModel model(small_config(task.vocab.size(), 17));
  for (const auto& [x, y] : task.pairs) {
    DecodeResult g = model.greedy_decode(x, 16);
    DecodeResult s = model.sample_decode(x, 1e-6, 99, 16);
    CHECK(g.ids == s.ids);
  }
}

TEST_CASE("decode length limits and log-prob signs") {
  ToyTask task = make_task(3, 18);
  Seq2SeqModel model(small_config(task.vocab.size(), 19));
  DecodeResult one = model.greedy_decode(task.pairs[0].first, 1);
  CHECK(one.ids.size() <= 1);
  DecodeResult r = model.greedy_decode(task.pairs[0].first, 24);
  CHECK(r.ids.size() <= 24);
  for (double lp : r.logprobs) CHECK(lp <= 0.0);
  CHECK_THROWS_AS(model.greedy_decode(task.pairs[0].first, 0), DataError);
}

TEST_CASE("decoded length is not tied to input length") {
  // lexicon with a two-word phrase lengthens the target
  TranslationLexicon lex;
  lex.add("一", {"aa", "bb"});
  lex.add("二", {"cc", "dd"});
  Corpus mono;
  mono.sentences.push_back(tokenize("一 二"));
  SubstitutionPolicy policy;
  policy.rate = 1.0;
  policy.seed = 20;
  auto sp = make_pairs(mono, lex, policy);
  REQUIRE(sp[0].second.size() == 4);

  Vocabulary vocab;
  for (const char* w : {"一", "二", "aa", "bb", "cc", "dd"}) vocab.add(w);
  auto pairs = encode_pairs(sp, vocab);
  Seq2SeqModel model(small_config(vocab.size(), 21));
  S2STrainConfig tc;
  tc.epochs = 300;
  tc.batch = 1;
  tc.lr = 5e-3;
  tc.seed = 22;
  train_s2s(model, pairs, tc);
  DecodeResult r = model.greedy_decode(pairs[0].first, 16);
  CHECK(r.ids.size() == 4);
  CHECK(r.ids != pairs[0].first);
}

TEST_CASE("soft decode emits distributions that sum to one") {
  ToyTask task = make_task(4, 23);
  Seq2SeqModel model(small_config(task.vocab.size(), 24));
  nn::Tape tape;
  SoftDecode sd = model.soft_decode(tape, task.pairs[0].first, 6);
  REQUIRE(sd.probs.size() == 6);
  for (const nn::Var& p : sd.probs) {
    double sum = 0.0;
    for (double v : p.value().data) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("out-of-range ids are rejected") {
  ToyTask task = make_task(2, 25);
  Seq2SeqModel model(small_config(task.vocab.size(), 26));
  nn::Tape tape;
  IdSeq bad = {static_cast<std::uint32_t>(task.vocab.size() + 7)};
  CHECK_THROWS_AS(model.nll(tape, bad, task.pairs[0].second), DataError);
}
