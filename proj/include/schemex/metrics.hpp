#pragma once

// Strict-match precision / recall / F1 over keyed extraction paths.

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "schemex/error.hpp"
#include "schemex/query.hpp"
#include "schemex/schema.hpp"

namespace schemex {

enum class Task { NER, REStrict, RETriplet, EETrigger, EEArgument, ABSA, Quadruple, Quintuple, CLSStrict, Path };

inline Task parse_task(std::string_view s) {
  if (s == "NER") return Task::NER;
  if (s == "RE-strict") return Task::REStrict;
  if (s == "RE-triplet") return Task::RETriplet;
  if (s == "EE-trigger") return Task::EETrigger;
  if (s == "EE-argument") return Task::EEArgument;
  if (s == "ABSA") return Task::ABSA;
  if (s == "Quadruple") return Task::Quadruple;
  if (s == "Quintuple") return Task::Quintuple;
  if (s == "CLS-strict") return Task::CLSStrict;
  if (s == "path") return Task::Path;
  throw Error(Errc::UnknownTask, "metrics: unknown task '" + std::string(s) + "'");
}

inline constexpr std::string_view kTaskNames =
    "NER, RE-strict, RE-triplet, EE-trigger, EE-argument, ABSA, Quadruple, Quintuple, CLS-strict, path";

// Which fields of which path element take part in the match key.
struct FieldSelect {
  std::size_t element = 0;
  bool type = true;
  bool offsets = true;
  bool surface = false;
};

struct KeySpec {
  std::vector<FieldSelect> fields;  // ignored when full_path is set
  bool full_path = false;
  bool full_path_offsets = true;
  std::size_t min_length = 1;
  bool leaf_only = false;  // path must end on a schema leaf
};

inline KeySpec metric_for_task(Task t) {
  KeySpec k;
  switch (t) {
    case Task::NER:
    case Task::EETrigger: k.fields = {{0, true, true, false}}; break;
    case Task::REStrict:
      k.fields = {{0, true, true, false}, {1, true, true, false}};
      k.min_length = 2;
      break;
    case Task::RETriplet:
      k.fields = {{1, true, false, false}, {0, false, false, true}, {1, false, false, true}};
      k.min_length = 2;
      break;
    case Task::EEArgument:
      k.fields = {{0, true, false, false}, {1, true, true, false}};
      k.min_length = 2;
      break;
    case Task::ABSA:
      k.full_path = true;
      k.min_length = 2;
      k.leaf_only = true;
      break;
    case Task::Quadruple:
      k.full_path = true;
      k.min_length = 3;
      k.leaf_only = true;
      break;
    case Task::Quintuple:
      k.full_path = true;
      k.min_length = 2;
      k.leaf_only = true;
      break;
    case Task::CLSStrict:
      k.full_path = true;
      k.full_path_offsets = false;
      break;
    case Task::Path: k.full_path = true; break;
  }
  return k;
}

struct MetricReport {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t matched = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

namespace detail {

inline void append_field(std::string& key, const PathElement& e, bool type, bool offsets, bool surface) {
  key += '\x1f';
  if (type) key += "t=" + e.type + '\x1e';
  if (offsets) {
    if (e.span)
      key += "o=" + std::to_string(e.span->start) + ":" + std::to_string(e.span->end) + '\x1e';
    else
      key += "o=-\x1e";
  }
  if (surface) key += "s=" + e.surface + '\x1e';
}

}  // namespace detail

// Match key of one path, or nullopt if the path does not take part in this metric.
inline std::optional<std::string> path_key(const Path& p, const KeySpec& spec, const Schema* schema = nullptr) {
  if (p.size() < spec.min_length) return std::nullopt;
  if (spec.leaf_only && schema) {
    const SchemaNode* n = find_node(*schema, path_labels(p));
    if (!n || !n->is_leaf()) return std::nullopt;
  }
  std::string key;
  if (spec.full_path) {
    key = "#" + std::to_string(p.size());
    for (const auto& e : p) detail::append_field(key, e, true, spec.full_path_offsets, false);
    return key;
  }
  for (const auto& f : spec.fields) {
    if (f.element >= p.size()) return std::nullopt;
    detail::append_field(key, p[f.element], f.type, f.offsets, f.surface);
  }
  return key;
}

// Keys of all paths; `scope` is prepended so keys from different examples never collide.
inline std::set<std::string> key_set(const std::vector<Path>& paths, const KeySpec& spec, const Schema* schema = nullptr,
                                     const std::string& scope = {}) {
  std::set<std::string> out;
  for (const auto& p : paths)
    if (auto k = path_key(p, spec, schema)) out.insert(scope + '\x1d' + *k);
  return out;
}

inline MetricReport strict_match_f1(const std::set<std::string>& gold, const std::set<std::string>& pred) {
  MetricReport r;
  r.gold = gold.size();
  r.predicted = pred.size();
  for (const auto& k : pred) r.matched += gold.count(k);
  r.precision = r.predicted ? static_cast<double>(r.matched) / static_cast<double>(r.predicted) : 0.0;
  r.recall = r.gold ? static_cast<double>(r.matched) / static_cast<double>(r.gold) : 0.0;
  // Harmonic mean of P and R, written so that only one rounding happens.
  r.f1 = r.gold + r.predicted ? 2.0 * static_cast<double>(r.matched) / static_cast<double>(r.gold + r.predicted) : 0.0;
  return r;
}

// Scores per-example predictions against per-example gold paths.
inline MetricReport evaluate_paths(const std::vector<std::vector<Path>>& gold, const std::vector<std::vector<Path>>& pred,
                                   const KeySpec& spec, const Schema* schema = nullptr) {
  std::set<std::string> g, p;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto gk = key_set(gold[i], spec, schema, std::to_string(i));
    g.insert(gk.begin(), gk.end());
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    auto pk = key_set(pred[i], spec, schema, std::to_string(i));
    p.insert(pk.begin(), pk.end());
  }
  return strict_match_f1(g, p);
}

}  // namespace schemex
