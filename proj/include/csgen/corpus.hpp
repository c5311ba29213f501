#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "csgen/errors.hpp"

namespace csgen {

// Role-based language tags: LangA plays the Chinese-script source role,
// LangB the Latin-script embedded role, so synthetic toy languages work
// the same way as real bilingual text.
enum class LanguageTag { LangA, LangB, NonVerbal };

struct Token {
  std::string surface;
  LanguageTag tag;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::optional<std::string> id;

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }

  std::string text() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out.push_back(' ');
      out += tokens[i].surface;
    }
    return out;
  }
};

struct Corpus {
  std::vector<Sentence> sentences;
  std::string name;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
};

namespace detail {

// Decodes one UTF-8 codepoint starting at `i`; advances `i` past it.
// Malformed bytes are treated as Latin-1 single bytes rather than errors
// so tagging stays total.
inline char32_t next_codepoint(std::string_view s, std::size_t& i) {
  const unsigned char b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  char32_t cp = b0;
  if (b0 >= 0xF0)
    len = 4, cp = b0 & 0x07u;
  else if (b0 >= 0xE0)
    len = 3, cp = b0 & 0x0Fu;
  else if (b0 >= 0xC0)
    len = 2, cp = b0 & 0x1Fu;
  if (i + len > s.size()) len = 1, cp = b0;
  for (std::size_t k = 1; k < len; ++k) {
    const unsigned char b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0u) != 0x80u) {
      len = 1;
      cp = b0;
      break;
    }
    cp = (cp << 6) | (b & 0x3Fu);
  }
  i += len;
  return cp;
}

inline bool is_cjk(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) ||   // unified ideographs
         (cp >= 0x3400 && cp <= 0x4DBF) ||   // extension A
         (cp >= 0xF900 && cp <= 0xFAFF);     // compatibility ideographs
}

}  // namespace detail

// Pure function of the surface string. Bracketed markers like "(laugh)"
// or "[noise]" are non-verbal; any CJK codepoint makes the token LangA;
// everything else is LangB.
inline LanguageTag tag_language(std::string_view surface) {
  if (surface.size() >= 2) {
    const char f = surface.front(), b = surface.back();
    if ((f == '(' && b == ')') || (f == '[' && b == ']')) return LanguageTag::NonVerbal;
  }
  std::size_t i = 0;
  while (i < surface.size()) {
    if (detail::is_cjk(detail::next_codepoint(surface, i))) return LanguageTag::LangA;
  }
  return LanguageTag::LangB;
}

inline Token make_token(std::string surface) {
  LanguageTag tag = tag_language(surface);
  return Token{std::move(surface), tag};
}

// Whitespace split, then each maximal run of CJK codepoints is split into
// single-character tokens.
inline Sentence tokenize(std::string_view line) {
  Sentence out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i == start) continue;
    const std::string_view field = line.substr(start, i - start);
    std::size_t p = 0;
    std::string pending;  // accumulates a non-CJK run
    while (p < field.size()) {
      const std::size_t cp_start = p;
      const char32_t cp = detail::next_codepoint(field, p);
      if (detail::is_cjk(cp)) {
        if (!pending.empty()) {
          out.tokens.push_back(make_token(std::move(pending)));
          pending.clear();
        }
        out.tokens.push_back(make_token(std::string(field.substr(cp_start, p - cp_start))));
      } else {
        pending.append(field.substr(cp_start, p - cp_start));
      }
    }
    if (!pending.empty()) out.tokens.push_back(make_token(std::move(pending)));
  }
  return out;
}

// Token <-> id bijection with reserved special ids. Immutable once built.
class Vocabulary {
 public:
  static constexpr std::uint32_t kPad = 0;
  static constexpr std::uint32_t kBos = 1;
  static constexpr std::uint32_t kEos = 2;
  static constexpr std::uint32_t kUnk = 3;

  Vocabulary() {
    for (const char* s : {"<pad>", "<bos>", "<eos>", "<unk>"}) add(s);
  }

  std::uint32_t add(std::string surface) {
    auto [it, inserted] = ids_.try_emplace(surface, static_cast<std::uint32_t>(surfaces_.size()));
    if (inserted) surfaces_.push_back(std::move(surface));
    return it->second;
  }

  std::size_t size() const { return surfaces_.size(); }

  std::uint32_t id_of(std::string_view surface) const {
    auto it = ids_.find(std::string(surface));
    return it == ids_.end() ? kUnk : it->second;
  }

  bool contains(std::string_view surface) const {
    return ids_.find(std::string(surface)) != ids_.end();
  }

  const std::string& surface_of(std::uint32_t id) const {
    if (id >= surfaces_.size())
      throw DataError("vocabulary id " + std::to_string(id) + " out of range (size " +
                      std::to_string(surfaces_.size()) + ")");
    return surfaces_[id];
  }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> surfaces_;
};

// Tokens with frequency >= min_count get ids in descending-frequency order,
// ties broken lexicographically. Identical inputs always produce identical
// id assignments.
inline Vocabulary build_vocab(const std::vector<const Corpus*>& corpora, std::size_t min_count = 1) {
  std::map<std::string, std::size_t> counts;
  for (const Corpus* c : corpora)
    for (const Sentence& s : c->sentences)
      for (const Token& t : s.tokens) ++counts[t.surface];

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [surface, n] : counts)
    if (n >= min_count) kept.emplace_back(surface, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  for (auto& [surface, n] : kept) v.add(surface);
  return v;
}

inline Vocabulary build_vocab(const Corpus& corpus, std::size_t min_count = 1) {
  return build_vocab(std::vector<const Corpus*>{&corpus}, min_count);
}

inline std::vector<std::uint32_t> encode(const Sentence& s, const Vocabulary& v,
                                         bool frame = false) {
  std::vector<std::uint32_t> ids;
  ids.reserve(s.size() + (frame ? 2 : 0));
  if (frame) ids.push_back(Vocabulary::kBos);
  for (const Token& t : s.tokens) ids.push_back(v.id_of(t.surface));
  if (frame) ids.push_back(Vocabulary::kEos);
  return ids;
}

// Strips framing and padding; fails on out-of-range ids.
inline Sentence decode(const std::vector<std::uint32_t>& ids, const Vocabulary& v) {
  Sentence s;
  for (std::uint32_t id : ids) {
    if (id == Vocabulary::kPad || id == Vocabulary::kBos || id == Vocabulary::kEos) continue;
    s.tokens.push_back(make_token(v.surface_of(id)));
  }
  return s;
}

// One sentence per line, tokens space-separated, UTF-8, LF line ends.
inline Corpus load_corpus(const std::string& path, std::string name = "") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path);
  Corpus c;
  c.name = name.empty() ? path : std::move(name);
  std::string line;
  while (std::getline(in, line)) c.sentences.push_back(tokenize(line));
  return c;
}

inline void save_corpus(const Corpus& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file: " + path);
  for (const Sentence& s : c.sentences) out << s.text() << '\n';
  if (!out) throw DataError("write failed: " + path);
}

// LangA token -> alternative LangB phrases. Duplicate sources in the file
// accumulate alternatives in file order.
class TranslationLexicon {
 public:
  using Phrase = std::vector<std::string>;

  void add(const std::string& source, Phrase translation) {
    if (translation.empty()) throw DataError("empty translation for lexicon key: " + source);
    entries_[source].push_back(std::move(translation));
  }

  const std::vector<Phrase>* lookup(const std::string& source) const {
    auto it = entries_.find(source);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, std::vector<Phrase>>& entries() const { return entries_; }

  std::string direction = "a_to_b";

 private:
  std::map<std::string, std::vector<Phrase>> entries_;
};

// Lines of the form `source<TAB>translation phrase`.
inline TranslationLexicon load_lexicon(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open lexicon file: " + path);
  TranslationLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected `source<TAB>translation`");
    const std::string source = line.substr(0, tab);
    TranslationLexicon::Phrase phrase;
    std::istringstream rest(line.substr(tab + 1));
    std::string word;
    while (rest >> word) phrase.push_back(word);
    if (phrase.empty())
      throw DataError(path + ":" + std::to_string(lineno) + ": empty translation");
    lex.add(source, std::move(phrase));
  }
  return lex;
}

inline void save_lexicon(const TranslationLexicon& lex, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write lexicon file: " + path);
  for (const auto& [source, phrases] : lex.entries())
    for (const auto& phrase : phrases) {
      out << source << '\t';
      for (std::size_t i = 0; i < phrase.size(); ++i) {
        if (i) out << ' ';
        out << phrase[i];
      }
      out << '\n';
    }
}

}  // namespace csgen
