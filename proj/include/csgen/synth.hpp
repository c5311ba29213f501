#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "csgen/corpus.hpp"
#include "csgen/errors.hpp"
#include "csgen/rng.hpp"

namespace csgen {

// Independent per-token Bernoulli replacement. Each substitutable LangA
// token is replaced with probability `rate` by a uniformly chosen
// translation phrase from the lexicon.
struct SubstitutionPolicy {
  double rate = 0.35;
  std::size_t max_phrase_len = 8;
  std::uint64_t seed = 0;
};

// Replaces lexicon-covered LangA tokens by LangB phrases. The random
// stream is derived from (seed, sentence_index), so substitution is pure
// per sentence and parallelizable without changing outputs. Draw order per
// substitutable token: one Bernoulli draw, then one phrase-choice draw
// only if replacing.
inline Sentence substitute(const Sentence& sentence, const TranslationLexicon& lexicon,
                           const SubstitutionPolicy& policy, std::uint64_t sentence_index = 0) {
  Rng rng(derive_seed(policy.seed, "synth", sentence_index));
  Sentence out;
  out.id = sentence.id;
  for (const Token& tok : sentence.tokens) {
    const std::vector<TranslationLexicon::Phrase>* phrases =
        tok.tag == LanguageTag::LangA ? lexicon.lookup(tok.surface) : nullptr;
    std::vector<const TranslationLexicon::Phrase*> usable;
    if (phrases)
      for (const auto& p : *phrases)
        if (p.size() <= policy.max_phrase_len) usable.push_back(&p);
    if (!usable.empty() && rng.uniform() < policy.rate) {
      const auto& phrase = *usable[rng.uniform_index(usable.size())];
      for (const std::string& word : phrase) out.tokens.push_back(make_token(word));
    } else {
      out.tokens.push_back(tok);
    }
  }
  return out;
}

// Pseudo-parallel (monolingual, code-switched) training pairs.
inline std::vector<std::pair<Sentence, Sentence>> make_pairs(const Corpus& corpus,
                                                             const TranslationLexicon& lexicon,
                                                             const SubstitutionPolicy& policy) {
  std::vector<std::pair<Sentence, Sentence>> pairs;
  pairs.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Sentence& s = corpus.sentences[i];
    pairs.emplace_back(s, substitute(s, lexicon, policy, i));
  }
  return pairs;
}

// Deterministic toy bilingual world: a CJK-range LangA alphabet, a Latin
// LangB word list, a bijective lexicon between them, a monolingual corpus
// and a code-switched target corpus built by substitution at cs_rate.
struct ToySpec {
  std::size_t vocab_a_size = 60;
  std::size_t vocab_b_size = 60;
  std::size_t min_sentence_len = 4;
  std::size_t max_sentence_len = 9;
  std::size_t corpus_size = 400;
  double cs_rate = 0.25;  // expected minority fraction; centers CMI near 25
  std::uint64_t seed = 0;
};

struct ToyData {
  Corpus mono;        // LangA-monolingual
  Corpus cs_target;   // code-switched style target
  TranslationLexicon lexicon;
  std::vector<std::string> vocab_a;
  std::vector<std::string> vocab_b;
};

namespace detail {

inline std::string cjk_char(std::size_t index) {
  const char32_t cp = 0x4E00 + static_cast<char32_t>(index);
  std::string s;
  s.push_back(static_cast<char>(0xE0 | (cp >> 12)));
  s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
  s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  return s;
}

inline std::string latin_word(std::size_t index) {
  std::string s(3, 'a');
  s[2] += static_cast<char>(index % 26);
  s[1] += static_cast<char>((index / 26) % 26);
  s[0] += static_cast<char>((index / 676) % 26);
  return s;
}

}  // namespace detail

inline ToyData generate_toy(const ToySpec& spec) {
  if (spec.vocab_a_size < 1 || spec.vocab_b_size < 1 || spec.corpus_size < 1 ||
      spec.min_sentence_len < 1 || spec.max_sentence_len < spec.min_sentence_len)
    throw DataError("invalid toy spec bounds");
  if (spec.vocab_b_size < spec.vocab_a_size)
    throw DataError("toy lexicon needs vocab_b_size >= vocab_a_size for a bijection");
  if (spec.vocab_a_size > 20000) throw DataError("toy vocab_a_size exceeds CJK range");

  ToyData toy;
  for (std::size_t i = 0; i < spec.vocab_a_size; ++i) toy.vocab_a.push_back(detail::cjk_char(i));
  for (std::size_t i = 0; i < spec.vocab_b_size; ++i) toy.vocab_b.push_back(detail::latin_word(i));

  // Bijective LangA -> LangB mapping under a seeded permutation.
  Rng lex_rng(derive_seed(spec.seed, "toy:lexicon"));
  std::vector<std::size_t> perm(spec.vocab_b_size);
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  lex_rng.shuffle(perm);
  for (std::size_t i = 0; i < spec.vocab_a_size; ++i)
    toy.lexicon.add(toy.vocab_a[i], {toy.vocab_b[perm[i]]});

  auto random_sentence = [&](Rng& rng) {
    const std::size_t len =
        spec.min_sentence_len +
        rng.uniform_index(spec.max_sentence_len - spec.min_sentence_len + 1);
    Sentence s;
    for (std::size_t i = 0; i < len; ++i)
      s.tokens.push_back(make_token(toy.vocab_a[rng.uniform_index(spec.vocab_a_size)]));
    return s;
  };

  Rng mono_rng(derive_seed(spec.seed, "toy:mono"));
  toy.mono.name = "toy-mono";
  for (std::size_t i = 0; i < spec.corpus_size; ++i)
    toy.mono.sentences.push_back(random_sentence(mono_rng));

  Rng target_rng(derive_seed(spec.seed, "toy:target"));
  SubstitutionPolicy policy;
  policy.rate = spec.cs_rate;
  policy.seed = derive_seed(spec.seed, "toy:target-subst");
  toy.cs_target.name = "toy-cs-target";
  for (std::size_t i = 0; i < spec.corpus_size; ++i)
    toy.cs_target.sentences.push_back(
        substitute(random_sentence(target_rng), toy.lexicon, policy, i));

  return toy;
}

}  // namespace csgen
