#pragma once

// Token-linking decoder for extraction levels and hand-shaking decoder for
// classification levels.

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "schemex/error.hpp"
#include "schemex/query.hpp"
#include "schemex/scores.hpp"

namespace schemex {

inline constexpr double kDefaultIeThreshold = 0.0;
inline constexpr double kDefaultClsThreshold = 0.9;

enum class LinkKind { HeadTail, HeadType, TypeTail };

struct LinkDecision {
  LinkKind kind;
  int i = 0;
  int j = 0;

  friend bool operator==(const LinkDecision&, const LinkDecision&) = default;
};

struct TypedSpan {
  int group = 0;       // index into query.groups
  int type_index = 0;  // index into that group's types
  std::string type;
  int head = 0;  // query token indices, inclusive
  int tail = 0;
  CharSpan offsets;
  std::string surface;

  friend bool operator==(const TypedSpan& a, const TypedSpan& b) {
    return std::tie(a.head, a.tail, a.group, a.type_index) == std::tie(b.head, b.tail, b.group, b.type_index);
  }
  friend auto operator<=>(const TypedSpan& a, const TypedSpan& b) {
    return std::tie(a.head, a.tail, a.group, a.type_index) <=> std::tie(b.head, b.tail, b.group, b.type_index);
  }
};

struct ClsDecision {
  int group = 0;
  std::vector<int> label_indices;
  std::vector<std::string> labels;  // empty means "no label"
  double score = 0.0;               // best product of the two activated cells

  bool empty() const { return labels.empty(); }
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline BoolMatrix threshold(const ScoreMatrix& z, double delta) {
  const std::size_t n = z.size();
  BoolMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.set(i, j, std::isfinite(z(i, j)) && z(i, j) >= delta);
  return out;
}

// All links that pass the threshold, grouped by region.
inline std::vector<LinkDecision> active_links(const ScoreMatrix& z, const Query& q, double delta) {
  std::vector<LinkDecision> out;
  const BoolMatrix on = threshold(z, delta);
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) {
      if (!on(i, j) || !q.scoring_mask(i, j)) continue;
      LinkKind kind = LinkKind::HeadTail;
      if (q.is_type_marker(i))
        kind = LinkKind::TypeTail;
      else if (q.is_type_marker(j))
        kind = LinkKind::HeadType;
      out.push_back({kind, static_cast<int>(i), static_cast<int>(j)});
    }
  return out;
}

namespace detail {

inline TypedSpan make_span(const Query& q, int head, int tail, int marker) {
  const auto& role = q.roles[static_cast<std::size_t>(marker)];
  TypedSpan s;
  s.group = role.group;
  s.type_index = role.type;
  s.type = q.groups[static_cast<std::size_t>(role.group)].types[static_cast<std::size_t>(role.type)];
  s.head = head;
  s.tail = tail;
  const auto& first = q.text_offsets[static_cast<std::size_t>(head - q.text_begin)];
  const auto& last = q.text_offsets[static_cast<std::size_t>(tail - q.text_begin)];
  s.offsets = {first.start, last.end};
  s.surface = q.text.substr(s.offsets.start, s.offsets.size());
  return s;
}

}  // namespace detail

// Spans (i, j) with Z[i,j] >= delta for which some [T] k has Z[i,k] >= delta and Z[k,j] >= delta.
inline std::vector<TypedSpan> decode_ie(const ScoreMatrix& z, const Query& q, double delta = kDefaultIeThreshold) {
  const BoolMatrix on = threshold(z, delta);
  std::vector<TypedSpan> out;
  for (const auto& g : q.groups)
    for (int marker : g.type_markers) {
      const auto k = static_cast<std::size_t>(marker);
      std::vector<int> heads, tails;
      for (int t = q.text_begin; t < q.text_end; ++t) {
        if (on(static_cast<std::size_t>(t), k)) heads.push_back(t);
        if (on(k, static_cast<std::size_t>(t))) tails.push_back(t);
      }
      for (int h : heads)
        for (int t : tails)
          if (h <= t && on(static_cast<std::size_t>(h), static_cast<std::size_t>(t)))
            out.push_back(detail::make_span(q, h, t, marker));
    }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Reference decoder: exhaustive triple loop over every (i, j, k).
inline std::vector<TypedSpan> oracle_decode(const ScoreMatrix& z, const Query& q, double delta = kDefaultIeThreshold) {
  const std::size_t n = q.size();
  auto pass = [&](std::size_t a, std::size_t b) { return std::isfinite(z(a, b)) && z(a, b) >= delta; };
  std::vector<TypedSpan> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      if (!q.is_text(i) || !q.is_text(j) || !pass(i, j)) continue;
      for (std::size_t k = 0; k < n; ++k)
        if (q.is_type_marker(k) && pass(i, k) && pass(k, j))
          out.push_back(detail::make_span(q, static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)));
    }
  std::sort(out.begin(), out.end());
  return out;
}

// Label of `group` maximizing sigmoid(Z[c,y]) * sigmoid(Z[y,c]); ties go to the lowest index.
inline ClsDecision decode_cls_single(const ScoreMatrix& z, const Query& q, int group = 0) {
  if (q.cls_token < 0) throw Error(Errc::NoCandidates, "decode: query has no classification token");
  const auto& g = q.groups.at(static_cast<std::size_t>(group));
  if (g.types.empty()) throw Error(Errc::NoCandidates, "decode: no candidate labels");
  const auto c = static_cast<std::size_t>(q.cls_token);
  ClsDecision d;
  d.group = group;
  int best = -1;
  double best_score = -1.0;
  for (std::size_t y = 0; y < g.types.size(); ++y) {
    const auto m = static_cast<std::size_t>(g.type_markers[y]);
    const double s = sigmoid(z(c, m)) * sigmoid(z(m, c));
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(y);
    }
  }
  d.label_indices = {best};
  d.labels = {g.types[static_cast<std::size_t>(best)]};
  d.score = best_score;
  return d;
}

// Labels of `group` whose two activated cells both exceed delta (strictly).
inline ClsDecision decode_cls_multi(const ScoreMatrix& z, const Query& q, int group = 0,
                                    double delta = kDefaultClsThreshold) {
  if (q.cls_token < 0) throw Error(Errc::NoCandidates, "decode: query has no classification token");
  const auto& g = q.groups.at(static_cast<std::size_t>(group));
  const auto c = static_cast<std::size_t>(q.cls_token);
  ClsDecision d;
  d.group = group;
  for (std::size_t y = 0; y < g.types.size(); ++y) {
    const auto m = static_cast<std::size_t>(g.type_markers[y]);
    const double a = sigmoid(z(c, m)), b = sigmoid(z(m, c));
    if (a > delta && b > delta) {
      d.label_indices.push_back(static_cast<int>(y));
      d.labels.push_back(g.types[y]);
      d.score = std::max(d.score, a * b);
    }
  }
  return d;
}

}  // namespace schemex
