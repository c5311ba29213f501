#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "csgen/corpus.hpp"

namespace csgen {

// Utterance-level code-mixing index in [0, 50]. 0 means monolingual (or
// purely non-verbal), 50 a perfectly balanced mix.
struct CmiScore {
  double value = 0.0;
  std::size_t n = 0;               // total tokens
  std::size_t u = 0;               // non-verbal tokens
  std::size_t dominant_count = 0;  // tokens of the dominant language
};

// Mixing-level buckets; boundaries are left-open/right-closed except C1,
// which is exactly 0.
enum class CmiBucket { C1, C2, C3, C4, C5 };

struct CmiGroup {
  LanguageTag dominant;  // LangA or LangB only
  CmiBucket bucket;

  bool operator==(const CmiGroup&) const = default;
};

namespace detail {

struct TokenCounts {
  std::size_t a = 0, b = 0, u = 0;
  std::size_t n() const { return a + b + u; }
};

inline TokenCounts count_tokens(const Sentence& s) {
  TokenCounts c;
  for (const Token& t : s.tokens) {
    switch (t.tag) {
      case LanguageTag::LangA: ++c.a; break;
      case LanguageTag::LangB: ++c.b; break;
      case LanguageTag::NonVerbal: ++c.u; break;
    }
  }
  return c;
}

}  // namespace detail

inline CmiScore cmi(const Sentence& s) {
  const auto c = detail::count_tokens(s);
  CmiScore score;
  score.n = c.n();
  score.u = c.u;
  score.dominant_count = std::max(c.a, c.b);
  if (score.n > score.u) {
    score.value =
        100.0 * (1.0 - static_cast<double>(score.dominant_count) /
                           static_cast<double>(score.n - score.u));
  }
  return score;
}

inline CmiBucket cmi_bucket(double value) {
  if (value <= 0.0) return CmiBucket::C1;
  if (value <= 15.0) return CmiBucket::C2;
  if (value <= 30.0) return CmiBucket::C3;
  if (value <= 45.0) return CmiBucket::C4;
  return CmiBucket::C5;
}

// Dominant language plus mixing bucket; absent when the sentence has no
// verbal tokens. Equal counts are broken toward the language of the first
// verbal token.
inline std::optional<CmiGroup> group(const Sentence& s) {
  const auto c = detail::count_tokens(s);
  if (c.n() == c.u) return std::nullopt;
  LanguageTag dominant;
  if (c.a != c.b) {
    dominant = c.a > c.b ? LanguageTag::LangA : LanguageTag::LangB;
  } else {
    dominant = LanguageTag::LangB;
    for (const Token& t : s.tokens)
      if (t.tag != LanguageTag::NonVerbal) {
        dominant = t.tag;
        break;
      }
  }
  return CmiGroup{dominant, cmi_bucket(cmi(s).value)};
}

// Normalized mass over the ten dominant-language groups plus an "empty"
// bin for sentences with no verbal tokens. Bins 0..4 are LangA C1..C5,
// 5..9 LangB C1..C5, 10 empty.
struct CmiHistogram {
  static constexpr std::size_t kBins = 11;
  static constexpr std::size_t kEmptyBin = 10;
  std::array<double, kBins> mass{};

  static std::size_t bin_of(const CmiGroup& g) {
    const std::size_t base = g.dominant == LanguageTag::LangA ? 0 : 5;
    return base + static_cast<std::size_t>(g.bucket);
  }

  static std::string bin_label(std::size_t bin) {
    static constexpr const char* kLabels[kBins] = {
        "ZH-C1", "ZH-C2", "ZH-C3", "ZH-C4", "ZH-C5",
        "EN-C1", "EN-C2", "EN-C3", "EN-C4", "EN-C5", "EMPTY"};
    return kLabels[bin];
  }
};

inline CmiHistogram histogram(const Corpus& corpus) {
  CmiHistogram h;
  if (corpus.empty()) return h;
  for (const Sentence& s : corpus.sentences) {
    const auto g = group(s);
    const std::size_t bin = g ? CmiHistogram::bin_of(*g) : CmiHistogram::kEmptyBin;
    h.mass[bin] += 1.0;
  }
  for (double& m : h.mass) m /= static_cast<double>(corpus.size());
  return h;
}

// Total variation distance in [0, 1].
inline double histogram_distance(const CmiHistogram& a, const CmiHistogram& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < CmiHistogram::kBins; ++i) sum += std::abs(a.mass[i] - b.mass[i]);
  return 0.5 * sum;
}

}  // namespace csgen
