#pragma once

// Recursive level-by-level extraction over the schema tree.

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "schemex/decode.hpp"
#include "schemex/error.hpp"
#include "schemex/model.hpp"
#include "schemex/query.hpp"
#include "schemex/schema.hpp"
#include "schemex/scores.hpp"
#include "schemex/tokenize.hpp"

namespace schemex {

struct EngineConfig {
  QueryOptions query;
  double delta_ie = kDefaultIeThreshold;
  double delta_cls = kDefaultClsThreshold;
};

// Produces the score matrix for a query.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual ScoreMatrix score(const Query& q) = 0;
};

template <class T>
class ModelScorer final : public Scorer {
 public:
  explicit ModelScorer(const Model<T>& m) : model_(m) {}
  ScoreMatrix score(const Query& q) override { return forward_scores(model_, q); }

 private:
  const Model<T>& model_;
};

// Gold items of a query: for every group, the next element of each gold path led by
// the group's prefix, restricted to the types the group offers in this query.
inline std::vector<Gold> gold_for_query(const Query& q, const std::vector<Path>& gold_paths) {
  std::vector<Gold> out;
  std::set<std::pair<int, PathElement>> seen;
  for (std::size_t g = 0; g < q.groups.size(); ++g) {
    const Path& prefix = q.groups[g].prefix.path;
    const auto& types = q.groups[g].types;
    for (const auto& p : gold_paths) {
      if (p.size() <= prefix.size() || !std::equal(prefix.begin(), prefix.end(), p.begin())) continue;
      const PathElement& next = p[prefix.size()];
      if (std::find(types.begin(), types.end(), next.type) == types.end()) continue;
      if (!seen.insert({static_cast<int>(g), next}).second) continue;
      out.push_back(Gold{static_cast<int>(g), next.type, next.span});
    }
  }
  return out;
}

// Scores straight from gold annotations, for tests and oracle runs.
class OracleScorer final : public Scorer {
 public:
  explicit OracleScorer(std::vector<Path> gold, double high = 5.0, double low = -5.0)
      : gold_(std::move(gold)), high_(high), low_(low) {}

  ScoreMatrix score(const Query& q) override {
    const auto items = gold_for_query(q, gold_);
    return scores_from_target(q, build_target(q, items), high_, low_);
  }

 private:
  std::vector<Path> gold_;
  double high_, low_;
};

// Feeds stored matrices in order.
class ReplayScorer final : public Scorer {
 public:
  explicit ReplayScorer(std::vector<ScoreMatrix> mats) : mats_(std::move(mats)) {}

  ScoreMatrix score(const Query& q) override {
    if (next_ >= mats_.size())
      throw Error(Errc::BadScoreFile, "score grid: ran out of matrices at query " + std::to_string(next_));
    const ScoreMatrix& m = mats_[next_];
    if (m.size() != q.size())
      throw Error(Errc::BadScoreFile, "score grid: matrix " + std::to_string(next_) + " is " +
                                          std::to_string(m.size()) + " wide, query has " + std::to_string(q.size()) +
                                          " tokens");
    ++next_;
    return m;
  }

  std::size_t consumed() const { return next_; }
  std::size_t remaining() const { return mats_.size() - next_; }

 private:
  std::vector<ScoreMatrix> mats_;
  std::size_t next_ = 0;
};

// Passes through to another scorer and keeps a copy of every matrix.
class RecordingScorer final : public Scorer {
 public:
  explicit RecordingScorer(Scorer& inner) : inner_(inner) {}
  ScoreMatrix score(const Query& q) override {
    recorded_.push_back(inner_.score(q));
    return recorded_.back();
  }
  const std::vector<ScoreMatrix>& recorded() const { return recorded_; }

 private:
  Scorer& inner_;
  std::vector<ScoreMatrix> recorded_;
};

struct ExtractionPath {
  Path elements;
  bool reached_leaf = false;

  friend bool operator==(const ExtractionPath& a, const ExtractionPath& b) { return a.elements == b.elements; }
  friend auto operator<=>(const ExtractionPath& a, const ExtractionPath& b) { return a.elements <=> b.elements; }
};

struct LevelPlan {
  std::size_t level = 1;
  std::vector<GroupSpec> groups;
  // Query group `origin` fields index into `groups`.
  std::vector<Query> queries;

  bool empty() const { return queries.empty(); }
};

// Deduplicates prior paths, attaches candidate types, and packs the groups into queries.
// Groups are partitioned by the mode of their children, so each query has one mode.
inline LevelPlan plan_level(const Schema& schema, const Vocab& vocab, const std::vector<Path>& prior,
                            std::string_view text, const TokenizedText& tokens, const EngineConfig& cfg,
                            std::size_t level) {
  LevelPlan plan;
  plan.level = level;
  std::set<Path> seen;
  std::vector<Mode> modes;
  for (const auto& p : prior) {
    if (!seen.insert(p).second) continue;
    const SchemaNode& node = node_at(schema, path_labels(p));
    if (node.is_leaf()) continue;
    plan.groups.push_back(GroupSpec{PrefixGroup{p}, candidate_types(schema, p, cfg.query)});
    modes.push_back(node.children.front().mode);
  }
  for (Mode mode : {Mode::Extract, Mode::ClassifySingle, Mode::ClassifyMulti}) {
    std::vector<GroupSpec> part;
    std::vector<int> index;
    for (std::size_t g = 0; g < plan.groups.size(); ++g)
      if (modes[g] == mode) {
        part.push_back(plan.groups[g]);
        index.push_back(static_cast<int>(g));
      }
    if (part.empty()) continue;
    for (auto& q : split_query(schema, vocab, part, text, tokens, mode, cfg.query)) {
      for (auto& qg : q.groups) qg.origin = index[static_cast<std::size_t>(qg.origin)];
      plan.queries.push_back(std::move(q));
    }
  }
  return plan;
}

// Decoded result of one query.
struct QueryOutput {
  std::vector<TypedSpan> spans;
  std::vector<ClsDecision> labels;
};

inline QueryOutput decode_query(const Query& q, const ScoreMatrix& z, const EngineConfig& cfg) {
  QueryOutput out;
  if (q.mode == Mode::Extract) {
    out.spans = decode_ie(z, q, cfg.delta_ie);
    return out;
  }
  for (std::size_t g = 0; g < q.groups.size(); ++g) {
    if (q.mode == Mode::ClassifySingle)
      out.labels.push_back(decode_cls_single(z, q, static_cast<int>(g)));
    else
      out.labels.push_back(decode_cls_multi(z, q, static_cast<int>(g), cfg.delta_cls));
  }
  return out;
}

// Continuations found for each plan group, sorted by (span, type).
struct LevelOutput {
  std::vector<std::vector<PathElement>> continuations;
};

// Ensembles sub-query outputs: union for extraction and multi-label levels,
// best hand-shake product for single-label levels.
inline LevelOutput merge_results(const LevelPlan& plan, const std::vector<QueryOutput>& outputs) {
  LevelOutput out;
  out.continuations.resize(plan.groups.size());
  std::vector<std::set<PathElement>> sets(plan.groups.size());
  struct Best {
    double score = -1;
    std::size_t label_rank = 0;
    std::string label;
  };
  std::map<int, Best> single;

  for (std::size_t qi = 0; qi < outputs.size(); ++qi) {
    const Query& q = plan.queries.at(qi);
    const QueryOutput& o = outputs[qi];
    for (const auto& s : o.spans) {
      const int origin = q.groups[static_cast<std::size_t>(s.group)].origin;
      sets[static_cast<std::size_t>(origin)].insert(PathElement{s.type, s.offsets, s.surface});
    }
    for (const auto& d : o.labels) {
      const int origin = q.groups[static_cast<std::size_t>(d.group)].origin;
      if (q.mode == Mode::ClassifyMulti) {
        for (const auto& l : d.labels) sets[static_cast<std::size_t>(origin)].insert(PathElement{l, std::nullopt, {}});
        continue;
      }
      if (d.labels.empty()) continue;
      const auto& all = plan.groups[static_cast<std::size_t>(origin)].types;
      const auto rank = static_cast<std::size_t>(std::find(all.begin(), all.end(), d.labels.front()) - all.begin());
      auto [it, fresh] = single.try_emplace(origin);
      if (fresh || d.score > it->second.score || (d.score == it->second.score && rank < it->second.label_rank))
        it->second = Best{d.score, rank, d.labels.front()};
    }
  }
  for (const auto& [origin, best] : single)
    sets[static_cast<std::size_t>(origin)].insert(PathElement{best.label, std::nullopt, {}});
  for (std::size_t g = 0; g < sets.size(); ++g) out.continuations[g].assign(sets[g].begin(), sets[g].end());
  return out;
}

// Called with every query before it is scored.
using QueryObserver = std::function<void(const Query&)>;

inline std::vector<ExtractionPath> extract(const Schema& schema, const Vocab& vocab, Scorer& scorer,
                                           std::string_view text, const EngineConfig& cfg,
                                           const QueryObserver& observe = {}) {
  const TokenizedText tokens = tokenize(vocab, text);
  std::set<ExtractionPath> results;
  if (tokens.size() == 0) return {};

  std::vector<Path> frontier{Path{}};
  for (std::size_t level = 1; level <= schema.depth && !frontier.empty(); ++level) {
    const LevelPlan plan = plan_level(schema, vocab, frontier, text, tokens, cfg, level);
    std::vector<QueryOutput> outputs;
    outputs.reserve(plan.queries.size());
    for (const auto& q : plan.queries) {
      if (observe) observe(q);
      outputs.push_back(decode_query(q, scorer.score(q), cfg));
    }
    const LevelOutput merged = merge_results(plan, outputs);

    std::vector<Path> next;
    for (std::size_t g = 0; g < plan.groups.size(); ++g) {
      const Path& prefix = plan.groups[g].prefix.path;
      const auto& conts = merged.continuations[g];
      if (conts.empty() && !prefix.empty()) results.insert(ExtractionPath{prefix, false});
      for (const auto& e : conts) {
        Path p = prefix;
        p.push_back(e);
        if (node_at(schema, path_labels(p)).is_leaf())
          results.insert(ExtractionPath{std::move(p), true});
        else
          next.push_back(std::move(p));
      }
    }
    frontier = std::move(next);
  }
  // Only reachable when the schema is deeper than its recorded depth.
  for (auto& p : frontier) results.insert(ExtractionPath{std::move(p), false});
  return {results.begin(), results.end()};
}

inline std::vector<Path> as_paths(const std::vector<ExtractionPath>& xs) {
  std::vector<Path> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.elements);
  return out;
}

// Teacher-forced queries for one example: level-i groups are the gold prefixes of
// length i-1, in first-seen order.
struct SupervisedQuery {
  Query query;
  TargetMatrix target;
};

inline std::vector<SupervisedQuery> supervision(const Schema& schema, const Vocab& vocab, const std::vector<Path>& gold,
                                                std::string_view text, const EngineConfig& cfg) {
  const TokenizedText tokens = tokenize(vocab, text);
  std::vector<SupervisedQuery> out;
  if (tokens.size() == 0) return out;
  for (std::size_t level = 1; level <= schema.depth; ++level) {
    std::vector<Path> prior;
    if (level == 1) prior.emplace_back();
    for (const auto& p : gold)
      if (level > 1 && p.size() >= level - 1)
        prior.emplace_back(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(level - 1));
    if (prior.empty()) break;
    LevelPlan plan = plan_level(schema, vocab, prior, text, tokens, cfg, level);
    for (auto& q : plan.queries) {
      const auto items = gold_for_query(q, gold);
      TargetMatrix t = build_target(q, items);
      out.push_back(SupervisedQuery{std::move(q), std::move(t)});
    }
  }
  return out;
}

}  // namespace schemex
