#pragma once

// Query construction: ESI layout, prompts isolation, scoring mask, targets.
//
// Token layout of one query:
//
//   [CLS] ( [P] prefix ( [T] type )* )+ [CLST]? [Text] text [SEP]
//
// where [CLST] is [CLASSIFY] or [MULTICLASSIFY] on classification levels.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "schemex/error.hpp"
#include "schemex/schema.hpp"
#include "schemex/tokenize.hpp"

namespace schemex {

// One step of an extraction path. Classification labels carry no span.
struct PathElement {
  std::string type;
  std::optional<CharSpan> span;
  std::string surface;

  // Identity is (type, span); the surface is derived from the span.
  friend bool operator==(const PathElement& a, const PathElement& b) { return a.type == b.type && a.span == b.span; }
  friend auto operator<=>(const PathElement& a, const PathElement& b) {
    if (auto c = a.span <=> b.span; c != 0) return c;
    return a.type <=> b.type;
  }
};

using Path = std::vector<PathElement>;

inline std::vector<std::string> path_labels(const Path& p) {
  std::vector<std::string> out;
  out.reserve(p.size());
  for (const auto& e : p) out.push_back(e.type);
  return out;
}

struct PrefixGroup {
  Path path;

  // "label: surface" pairs joined by ","; label-only elements render as the label.
  std::string rendered() const {
    std::string out;
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (i) out += ',';
      out += path[i].type;
      if (path[i].span) out += ": " + path[i].surface;
    }
    return out;
  }

  friend bool operator==(const PrefixGroup&, const PrefixGroup&) = default;
};

// A prefix group together with the candidate types offered after it.
struct GroupSpec {
  PrefixGroup prefix;
  std::vector<std::string> types;
};

struct QueryOptions {
  std::size_t max_len = 512;
  std::size_t max_prompt_len = 256;
  bool isolation = true;
  // Offer candidate types in byte order rather than schema order.
  bool sort_types = true;
};

// Dense square boolean matrix.
class BoolMatrix {
 public:
  BoolMatrix() = default;
  explicit BoolMatrix(std::size_t n) : n_(n), cells_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool operator()(std::size_t i, std::size_t j) const { return cells_[i * n_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v = true) { cells_[i * n_ + j] = v ? 1 : 0; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1)); }

  friend bool operator==(const BoolMatrix&, const BoolMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> cells_;
};

using TargetMatrix = BoolMatrix;

enum class Slot : std::uint8_t { Cls, PrefixMarker, Prefix, TypeMarker, Type, ClsToken, TextMarker, Text, Sep };

struct TokenRole {
  Slot slot = Slot::Cls;
  int group = -1;
  int type = -1;
  int text_index = -1;
};

struct QueryGroup {
  PrefixGroup prefix;
  std::vector<std::string> types;
  // Index of this group in the caller's group list (before splitting).
  int origin = 0;
  int prefix_marker = -1;
  std::vector<int> type_markers;
};

struct Query {
  Mode mode = Mode::Extract;
  std::vector<QueryGroup> groups;
  std::string text;
  std::vector<CharSpan> text_offsets;

  std::vector<int> token_ids;
  std::vector<int> position_ids;
  std::vector<int> token_type_ids;
  std::vector<TokenRole> roles;
  BoolMatrix attention_mask;
  BoolMatrix scoring_mask;

  int cls_token = -1;
  int text_marker = -1;
  int text_begin = 0;  // first text token
  int text_end = 0;    // one past the last text token
  std::size_t esi_length = 0;
  std::size_t max_prompt_len = 256;
  bool isolation = true;

  std::size_t size() const { return token_ids.size(); }
  bool is_text(std::size_t i) const { return roles[i].slot == Slot::Text; }
  bool is_type_marker(std::size_t i) const { return roles[i].slot == Slot::TypeMarker; }
};

namespace detail {

inline std::size_t count_tokens(std::string_view s) { return split_tokens(s).size(); }

// Tokens a group contributes to the ESI: [P] prefix ([T] type)*.
inline std::size_t group_header_cost(const PrefixGroup& g) { return 1 + count_tokens(g.rendered()); }
inline std::size_t type_cost(const std::string& t) { return 1 + count_tokens(t); }

inline bool globally_visible(Slot s) {
  return s == Slot::Cls || s == Slot::Sep || s == Slot::ClsToken || s == Slot::TextMarker || s == Slot::Text;
}

inline bool in_prefix(Slot s) { return s == Slot::PrefixMarker || s == Slot::Prefix; }
inline bool in_type(Slot s) { return s == Slot::TypeMarker || s == Slot::Type; }

inline bool may_attend(const TokenRole& a, const TokenRole& b) {
  if (globally_visible(a.slot) || globally_visible(b.slot)) return true;
  if (a.group != b.group) return false;
  if (in_prefix(a.slot) || in_prefix(b.slot)) return true;
  return a.type == b.type;
}

}  // namespace detail

// Candidate types for the node reached by `path`, in the configured order.
inline std::vector<std::string> candidate_types(const Schema& schema, const Path& path, const QueryOptions& opts) {
  auto labels = path_labels(path);
  auto types = children_of(schema, labels);
  if (opts.sort_types) std::sort(types.begin(), types.end());
  return types;
}

inline void assign_isolation(Query& q) {
  const std::size_t n = q.size();
  q.position_ids.assign(n, 0);
  q.token_type_ids.assign(n, 0);
  q.attention_mask = BoolMatrix(n);

  for (std::size_t i = 0; i < n; ++i) {
    switch (q.roles[i].slot) {
      case Slot::PrefixMarker:
      case Slot::Prefix: q.token_type_ids[i] = 1; break;
      case Slot::TypeMarker:
      case Slot::Type: q.token_type_ids[i] = 2; break;
      case Slot::ClsToken: q.token_type_ids[i] = 3; break;
      default: q.token_type_ids[i] = 0;
    }
  }

  if (!q.isolation) {
    for (std::size_t i = 0; i < n; ++i) {
      q.position_ids[i] = static_cast<int>(i);
      for (std::size_t j = 0; j < n; ++j) q.attention_mask.set(i, j);
    }
    return;
  }

  const int text_base = static_cast<int>(q.max_prompt_len);
  int prefix_len = 0;  // tokens in the current group's prefix segment, [P] included
  int cursor = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = q.roles[i];
    switch (r.slot) {
      case Slot::Cls: q.position_ids[i] = 0; break;
      case Slot::PrefixMarker:
        prefix_len = 1;
        cursor = 1;
        q.position_ids[i] = cursor++;
        break;
      case Slot::Prefix:
        ++prefix_len;
        q.position_ids[i] = cursor++;
        break;
      case Slot::TypeMarker:
        cursor = 1 + prefix_len;
        q.position_ids[i] = cursor++;
        break;
      case Slot::Type: q.position_ids[i] = cursor++; break;
      case Slot::ClsToken: q.position_ids[i] = text_base - 1; break;
      case Slot::TextMarker: q.position_ids[i] = text_base; break;
      case Slot::Text: q.position_ids[i] = text_base + 1 + r.text_index; break;
      case Slot::Sep: q.position_ids[i] = text_base + 1 + static_cast<int>(q.text_offsets.size()); break;
    }
  }

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) q.attention_mask.set(i, j, detail::may_attend(q.roles[i], q.roles[j]));
}

inline BoolMatrix build_scoring_mask(const Query& q) {
  const std::size_t n = q.size();
  BoolMatrix m(n);
  if (is_classify(q.mode)) {
    const auto c = static_cast<std::size_t>(q.cls_token);
    for (const auto& g : q.groups)
      for (int t : g.type_markers) {
        m.set(c, static_cast<std::size_t>(t));
        m.set(static_cast<std::size_t>(t), c);
      }
    return m;
  }
  std::vector<std::size_t> markers;
  for (const auto& g : q.groups)
    for (int t : g.type_markers) markers.push_back(static_cast<std::size_t>(t));
  for (auto i = static_cast<std::size_t>(q.text_begin); i < static_cast<std::size_t>(q.text_end); ++i) {
    for (std::size_t j = i; j < static_cast<std::size_t>(q.text_end); ++j) m.set(i, j);
    for (auto k : markers) {
      m.set(i, k);
      m.set(k, i);
    }
  }
  return m;
}

inline Query build_query(const Schema& schema, const Vocab& vocab, std::span<const GroupSpec> groups,
                         std::string_view text, const TokenizedText& tokens, Mode mode, const QueryOptions& opts) {
  if (groups.empty()) throw Error(Errc::EmptyTypeSet, "query: no prefix groups");
  for (const auto& g : groups) {
    if (g.types.empty()) throw Error(Errc::EmptyTypeSet, "query: group \"" + g.prefix.rendered() + "\" has no types");
    const SchemaNode& node = node_at(schema, path_labels(g.prefix.path));
    for (const auto& t : g.types)
      if (!node.child(t))
        throw Error(Errc::UnknownPath, "query: type \"" + t + "\" is not a child of \"" + g.prefix.rendered() + "\"");
  }

  Query q;
  q.mode = mode;
  q.text = std::string(text);
  q.text_offsets = tokens.offsets;
  q.max_prompt_len = opts.max_prompt_len;
  q.isolation = opts.isolation;

  auto push = [&](int id, TokenRole role) {
    q.token_ids.push_back(id);
    q.roles.push_back(role);
    return static_cast<int>(q.token_ids.size() - 1);
  };

  push(Vocab::kClsId, {Slot::Cls});
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& spec = groups[gi];
    const int g = static_cast<int>(gi);
    QueryGroup qg;
    qg.prefix = spec.prefix;
    qg.types = spec.types;
    qg.origin = g;
    qg.prefix_marker = push(Vocab::kPrefixId, {Slot::PrefixMarker, g});
    for (int id : tokenize(vocab, spec.prefix.rendered()).token_ids) push(id, {Slot::Prefix, g});
    for (std::size_t ti = 0; ti < spec.types.size(); ++ti) {
      const int t = static_cast<int>(ti);
      qg.type_markers.push_back(push(Vocab::kTypeId, {Slot::TypeMarker, g, t}));
      for (int id : tokenize(vocab, spec.types[ti]).token_ids) push(id, {Slot::Type, g, t});
    }
    q.groups.push_back(std::move(qg));
  }
  if (is_classify(mode))
    q.cls_token = push(mode == Mode::ClassifySingle ? Vocab::kClassifyId : Vocab::kMultiClassifyId, {Slot::ClsToken});
  q.esi_length = q.token_ids.size();
  if (q.esi_length > opts.max_prompt_len)
    throw Error(Errc::PromptOverflow, "query: ESI of " + std::to_string(q.esi_length) + " tokens exceeds max_prompt_len " +
                                          std::to_string(opts.max_prompt_len));

  q.text_marker = push(Vocab::kTextId, {Slot::TextMarker});
  q.text_begin = static_cast<int>(q.token_ids.size());
  for (std::size_t t = 0; t < tokens.size(); ++t)
    push(tokens.token_ids[t], {Slot::Text, -1, -1, static_cast<int>(t)});
  q.text_end = static_cast<int>(q.token_ids.size());
  push(Vocab::kSepId, {Slot::Sep});

  const std::size_t last_position =
      opts.isolation ? opts.max_prompt_len + 1 + tokens.size() : q.token_ids.size() - 1;
  if (q.token_ids.size() > opts.max_len || last_position >= opts.max_len)
    throw Error(Errc::TextTooLong, "query: " + std::to_string(tokens.size()) + " text tokens do not fit max_len " +
                                       std::to_string(opts.max_len));

  assign_isolation(q);
  q.scoring_mask = build_scoring_mask(q);
  return q;
}

// Packs (group, type) pairs greedily, in order, into queries whose ESI fits the budget.
inline std::vector<Query> split_query(const Schema& schema, const Vocab& vocab, std::span<const GroupSpec> groups,
                                      std::string_view text, const TokenizedText& tokens, Mode mode,
                                      const QueryOptions& opts) {
  const std::size_t budget = opts.max_prompt_len;
  const std::size_t base = 1 + (is_classify(mode) ? 1 : 0);  // [CLS] and [CLST]

  struct Pending {
    std::vector<GroupSpec> groups;
    std::vector<int> origins;
    std::size_t cost = 0;
  };
  std::vector<Pending> packs;
  Pending cur;
  cur.cost = base;

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    if (g.types.empty()) throw Error(Errc::EmptyTypeSet, "query: group \"" + g.prefix.rendered() + "\" has no types");
    const std::size_t header = detail::group_header_cost(g.prefix);
    bool open = false;  // whether `cur` already holds this group
    for (const auto& type : g.types) {
      const std::size_t tc = detail::type_cost(type);
      if (base + header + tc > budget)
        throw Error(Errc::PromptOverflow, "query: group \"" + g.prefix.rendered() + "\" with type \"" + type +
                                              "\" exceeds max_prompt_len " + std::to_string(budget));
      const std::size_t extra = open ? tc : header + tc;
      if (cur.cost + extra > budget) {
        packs.push_back(std::move(cur));
        cur = Pending{};
        cur.cost = base;
        open = false;
      }
      if (!open) {
        cur.groups.push_back(GroupSpec{g.prefix, {}});
        cur.origins.push_back(static_cast<int>(gi));
        cur.cost += header;
        open = true;
      }
      cur.groups.back().types.push_back(type);
      cur.cost += tc;
    }
  }
  if (!cur.groups.empty()) packs.push_back(std::move(cur));

  std::vector<Query> out;
  out.reserve(packs.size());
  for (auto& p : packs) {
    Query q = build_query(schema, vocab, p.groups, text, tokens, mode, opts);
    for (std::size_t i = 0; i < q.groups.size(); ++i) q.groups[i].origin = p.origins[i];
    out.push_back(std::move(q));
  }
  return out;
}

// Gold item at one level: a typed span (extraction) or a label (classification).
struct Gold {
  int group = 0;  // index into query.groups
  std::string type;
  std::optional<CharSpan> span;
};

inline TargetMatrix build_target(const Query& q, std::span<const Gold> gold) {
  TargetMatrix t(q.size());
  for (const auto& g : gold) {
    if (g.group < 0 || static_cast<std::size_t>(g.group) >= q.groups.size())
      throw Error(Errc::UnknownGoldType, "query: gold refers to missing group " + std::to_string(g.group));
    const auto& qg = q.groups[static_cast<std::size_t>(g.group)];
    auto it = std::find(qg.types.begin(), qg.types.end(), g.type);
    if (it == qg.types.end())
      throw Error(Errc::UnknownGoldType, "query: gold type \"" + g.type + "\" not offered after \"" +
                                             qg.prefix.rendered() + "\"");
    const auto marker = static_cast<std::size_t>(qg.type_markers[static_cast<std::size_t>(it - qg.types.begin())]);

    if (is_classify(q.mode)) {
      if (g.span) throw Error(Errc::MisalignedSpan, "query: classification gold must not carry a span");
      const auto c = static_cast<std::size_t>(q.cls_token);
      t.set(c, marker);
      t.set(marker, c);
      continue;
    }
    if (!g.span) throw Error(Errc::MisalignedSpan, "query: extraction gold \"" + g.type + "\" lacks a span");
    int head = -1, tail = -1;
    for (std::size_t k = 0; k < q.text_offsets.size(); ++k) {
      if (q.text_offsets[k].start == g.span->start && head < 0) head = static_cast<int>(k);
      if (q.text_offsets[k].end == g.span->end) tail = static_cast<int>(k);
    }
    if (head < 0 || tail < 0 || head > tail || g.span->start >= g.span->end)
      throw Error(Errc::MisalignedSpan, "query: span [" + std::to_string(g.span->start) + ", " +
                                            std::to_string(g.span->end) + ") is not on token boundaries");
    const auto h = static_cast<std::size_t>(q.text_begin + head);
    const auto e = static_cast<std::size_t>(q.text_begin + tail);
    t.set(h, e);
    t.set(h, marker);
    t.set(marker, e);
  }
  return t;
}

// One-line text rendering: markers joined without spaces, labels and text after a single space.
inline std::string render_query(const Query& q) {
  std::string out = "[CLS]";
  for (const auto& g : q.groups) {
    out += "[P]";
    const std::string p = g.prefix.rendered();
    if (!p.empty()) out += " " + p;
    for (const auto& t : g.types) out += "[T] " + t;
  }
  if (q.mode == Mode::ClassifySingle) out += "[CLASSIFY]";
  if (q.mode == Mode::ClassifyMulti) out += "[MULTICLASSIFY]";
  out += "[Text]";
  if (!q.text.empty()) out += " " + q.text;
  out += "[SEP]";
  return out;
}

}  // namespace schemex
