#pragma once

// Word-level tokenizer with exact character offsets.
//
// A token is one of:
//   * a maximal run of word bytes (ASCII alphanumerics, '_', or any byte >= 0x80),
//   * an apostrophe immediately followed by a run of word bytes ("'s", "'re"),
//   * any other single non-space byte.
// Whitespace separates tokens and is never part of one.

#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "schemex/error.hpp"

namespace schemex {

struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  friend auto operator<=>(const CharSpan&, const CharSpan&) = default;
};

namespace special {
inline constexpr std::string_view kPad = "[PAD]";
inline constexpr std::string_view kUnk = "[UNK]";
inline constexpr std::string_view kCls = "[CLS]";
inline constexpr std::string_view kSep = "[SEP]";
inline constexpr std::string_view kPrefix = "[P]";
inline constexpr std::string_view kType = "[T]";
inline constexpr std::string_view kText = "[Text]";
inline constexpr std::string_view kClassify = "[CLASSIFY]";
inline constexpr std::string_view kMultiClassify = "[MULTICLASSIFY]";

inline constexpr std::array<std::string_view, 9> kAll = {kPad, kUnk,  kCls,      kSep,          kPrefix,
                                                         kType, kText, kClassify, kMultiClassify};
}  // namespace special

class Vocab {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;
  static constexpr int kClsId = 2;
  static constexpr int kSepId = 3;
  static constexpr int kPrefixId = 4;
  static constexpr int kTypeId = 5;
  static constexpr int kTextId = 6;
  static constexpr int kClassifyId = 7;
  static constexpr int kMultiClassifyId = 8;
  static constexpr int kReserved = 9;

  Vocab() {
    for (auto tok : special::kAll) add(std::string(tok));
  }

  // Returns the id of `token`, inserting it if new.
  int add(const std::string& token) {
    auto [it, inserted] = ids_.try_emplace(token, static_cast<int>(tokens_.size()));
    if (inserted) tokens_.push_back(token);
    return it->second;
  }

  int id(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? kUnkId : it->second;
  }

  bool contains(std::string_view token) const { return ids_.contains(std::string(token)); }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }

  // `token<TAB>id` per line, sorted by id.
  std::string serialize() const {
    std::string out;
    for (std::size_t i = 0; i < tokens_.size(); ++i) out += tokens_[i] + '\t' + std::to_string(i) + '\n';
    return out;
  }

  static Vocab deserialize(std::string_view text) {
    Vocab v;
    v.ids_.clear();
    v.tokens_.clear();
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto tab = line.rfind('\t');
      if (tab == std::string::npos) throw Error(Errc::Io, "vocab: line without tab");
      std::string tok = line.substr(0, tab);
      int id = 0;
      try {
        id = std::stoi(line.substr(tab + 1));
      } catch (const std::exception&) {
        throw Error(Errc::Io, "vocab: bad id in line '" + line + "'");
      }
      if (id != static_cast<int>(v.tokens_.size())) throw Error(Errc::Io, "vocab: ids must be dense and sorted");
      if (!v.ids_.try_emplace(tok, id).second) throw Error(Errc::Io, "vocab: duplicate token '" + tok + "'");
      v.tokens_.push_back(tok);
    }
    for (std::size_t i = 0; i < special::kAll.size(); ++i)
      if (v.tokens_.size() <= i || v.tokens_[i] != special::kAll[i])
        throw Error(Errc::Io, "vocab: reserved tokens missing or out of order");
    return v;
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::Io, "cannot write vocab '" + path + "'");
    f << serialize();
  }

  static Vocab load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::Io, "vocab not found: '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return deserialize(ss.str());
  }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> tokens_;
};

struct TokenizedText {
  std::vector<int> token_ids;
  std::vector<CharSpan> offsets;

  std::size_t size() const { return token_ids.size(); }
};

namespace detail {

inline bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
inline bool is_word(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

}  // namespace detail

// Token boundaries only; ids are assigned by the caller.
inline std::vector<CharSpan> split_tokens(std::string_view text) {
  std::vector<CharSpan> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto at = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
  while (i < n) {
    if (detail::is_space(at(i))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (detail::is_word(at(i))) {
      while (i < n && detail::is_word(at(i))) ++i;
    } else if (at(i) == '\'' && i + 1 < n && detail::is_word(at(i + 1))) {
      ++i;
      while (i < n && detail::is_word(at(i))) ++i;
    } else {
      ++i;
    }
    out.push_back({start, i});
  }
  return out;
}

inline Vocab build_vocab(const std::vector<std::string>& corpus, const std::vector<std::string>& schema_labels) {
  if (corpus.empty()) throw Error(Errc::EmptyCorpus, "tokenize: corpus is empty");
  Vocab v;
  auto absorb = [&](std::string_view s) {
    for (auto sp : split_tokens(s)) v.add(std::string(s.substr(sp.start, sp.size())));
  };
  for (const auto& s : corpus) absorb(s);
  for (const auto& s : schema_labels) absorb(s);
  return v;
}

inline TokenizedText tokenize(const Vocab& vocab, std::string_view text) {
  TokenizedText t;
  t.offsets = split_tokens(text);
  t.token_ids.reserve(t.offsets.size());
  for (auto sp : t.offsets) t.token_ids.push_back(vocab.id(text.substr(sp.start, sp.size())));
  return t;
}

inline std::string span_text(std::string_view source, CharSpan span) {
  if (span.start > span.end || span.end > source.size())
    throw Error(Errc::OutOfBounds, "tokenize: span [" + std::to_string(span.start) + ", " + std::to_string(span.end) +
                                       ") outside text of length " + std::to_string(source.size()));
  return std::string(source.substr(span.start, span.size()));
}

}  // namespace schemex
