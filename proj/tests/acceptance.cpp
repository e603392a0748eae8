// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero if any fail.
// Pass criterion ids (e.g. `acceptance A1 A5`) to run a subset.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "support/fixtures.hpp"
#include "support/random_cases.hpp"

using namespace schemex;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::set<std::tuple<int, std::string, int, int>> span_keys(const std::vector<TypedSpan>& spans) {
  std::set<std::tuple<int, std::string, int, int>> out;
  for (const auto& s : spans) out.emplace(s.group, s.type, s.head, s.tail);
  return out;
}

// A1
Outcome decode_matches_oracle() {
  Stopwatch clock;
  std::mt19937_64 rng(101);
  QueryOptions opts;
  opts.max_len = 160;
  opts.max_prompt_len = 96;
  std::size_t mismatches = 0, spans = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t types = 1 + rng() % 4, groups = 1 + rng() % 2;
    const auto c = fixtures::random_case(rng, types, groups, Mode::Extract, opts, 2 + rng() % 23);
    const ScoreMatrix z = fixtures::random_scores(rng, c.query);
    const double delta = static_cast<double>(rng() % 3) - 1.0;
    const auto fast = decode_ie(z, c.query, delta);
    const auto slow = oracle_decode(z, c.query, delta);
    const auto a = span_keys(fast), b = span_keys(slow);
    if (a != b) ++mismatches;
    spans += a.size();
  }
  const double t = clock.seconds();
  return {mismatches == 0 && t < 10.0, "decode_ie vs oracle on 1000 random matrices: " + std::to_string(mismatches) +
                                           " mismatches, " + std::to_string(spans) + " spans, " + fmt(t) + " s"};
}

// A2
Outcome gradients_match_finite_differences() {
  Stopwatch clock;
  std::mt19937_64 rng(102);
  QueryOptions opts;
  opts.max_len = 64;
  opts.max_prompt_len = 40;
  double worst = 0;
  std::string where;
  std::size_t checked = 0;
  const Mode modes[] = {Mode::Extract, Mode::ClassifySingle, Mode::ClassifyMulti};
  for (int trial = 0; trial < 20; ++trial) {
    const Mode mode = modes[trial % 3];
    const auto c = fixtures::random_case(rng, 2 + rng() % 2, 1 + rng() % 2, mode, opts, 6);
    const auto m = init_model<double>(fixtures::tiny_dims(c.vocab.size(), 64), 1000 + trial, 0.5);
    const auto g = fixtures::check_gradients(m, c.query, c.target, 1e-5);
    checked += g.checked;
    if (g.max_rel > worst) {
      worst = g.max_rel;
      where = g.worst;
    }
  }
  const double t = clock.seconds();
  return {worst <= 1e-4 && t < 60.0, "max relative error " + fmt(worst) + " (" + where + ") over " +
                                         std::to_string(checked) + " entries of 20 queries, floor " +
                                         fmt(fixtures::kGradFloor) + ", " + fmt(t) + " s"};
}

// A3
Outcome closed_form_loss() {
  BoolMatrix valid(2), target(2);
  valid.set(0, 0);
  valid.set(1, 1);
  target.set(1, 1);
  const Mat<double> z = Mat<double>::Zero(2, 2);
  const double l = circle_loss(z, valid, target);
  const double err = std::abs(l - 2 * std::log(2.0));
  return {err <= 1e-9, "loss " + fmt(l, 17) + ", |loss - 2 ln 2| = " + fmt(err)};
}

// A4
Outcome rope_invariances() {
  std::mt19937_64 rng(104);
  std::normal_distribution<double> normal(0, 1);
  double zero_err = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Mat<double> x(2, 64);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    const int p = static_cast<int>(rng() % 512);
    const auto r = detail::rope(x, {p, p}, 10000.0);
    zero_err = std::max(zero_err, std::abs(r.row(0).dot(r.row(1)) - x.row(0).dot(x.row(1))));
  }
  double shift_err = 0;
  QueryOptions opts;
  opts.max_len = 64;
  opts.max_prompt_len = 40;
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = fixtures::random_case(rng, 3, 2, Mode::Extract, opts, 8);
    auto dims = fixtures::tiny_dims(c.vocab.size(), 64);
    dims.head_dim = 16;
    const auto m = init_model<double>(dims, 2000 + trial, 0.5);
    const auto h = encode(m, c.query);
    const ScoreMatrix z = score(m, h, c.query);
    Query shifted = c.query;
    const int delta = 1 + static_cast<int>(rng() % 200);
    for (auto& pos : shifted.position_ids) pos += delta;
    const ScoreMatrix zs = score(m, h, shifted);
    for (std::size_t i = 0; i < c.query.size(); ++i)
      for (std::size_t j = 0; j < c.query.size(); ++j)
        if (c.query.scoring_mask(i, j)) {
          const auto r = static_cast<Eigen::Index>(i), k = static_cast<Eigen::Index>(j);
          shift_err = std::max(shift_err, std::abs(z.z(r, k) - zs.z(r, k)));
        }
  }
  return {zero_err <= 1e-9 && shift_err <= 1e-9,
          "zero offset max error " + fmt(zero_err) + ", uniform shift max error " + fmt(shift_err)};
}

// A5
Outcome overfit_toy_corpus() {
  Stopwatch clock;
  const Schema schema = parse_schema(fixtures::kToySchema);
  const auto data = fixtures::synthetic_corpus(50, 2024);
  std::vector<std::string> texts;
  for (const auto& ex : data) texts.push_back(ex.text);
  const Vocab vocab = fixtures::vocab_for(schema, texts);

  TrainConfig cfg;
  cfg.dims.hidden = 64;
  cfg.dims.head_dim = 64;
  cfg.dims.layers = 2;
  cfg.dims.heads = 4;
  cfg.dims.ffn = 128;
  cfg.dims.max_len = 64;
  cfg.engine = fixtures::small_engine(64, 40);
  cfg.epochs = 200;
  cfg.batch_size = 5;
  cfg.optimizer.learning_rate = 3e-3;
  cfg.seed = 7;
  cfg.early_stop = true;
  const auto result = train(data, schema, vocab, cfg);
  const double t = clock.seconds();

  const auto pred = predict_all(result.model, schema, vocab, data, cfg.engine);
  const auto gold = gold_all(data);
  const auto ent = evaluate_paths(gold, pred, metric_for_task(Task::NER), &schema);
  const auto rel = evaluate_paths(gold, pred, metric_for_task(Task::REStrict), &schema);

  // Determinism: a second run with the same seed reproduces the checkpoint byte for byte.
  auto short_cfg = cfg;
  short_cfg.epochs = 3;
  short_cfg.eval_every = 0;
  short_cfg.early_stop = false;
  std::ostringstream a, b;
  write_checkpoint(a, train(data, schema, vocab, short_cfg).model);
  write_checkpoint(b, train(data, schema, vocab, short_cfg).model);
  const bool same = a.str() == b.str();

  return {ent.f1 == 1.0 && rel.f1 == 1.0 && result.log.size() <= 200 && t < 300.0 && same,
          "entity F1 " + fmt(ent.f1, 4) + ", relation F1 " + fmt(rel.f1, 4) + " after " +
              std::to_string(result.log.size()) + " epochs, " + fmt(t) + " s, repeat run " +
              (same ? "identical" : "differs")};
}

// A6
Outcome coqe_recursion_closure() {
  const Schema schema = parse_schema(fixtures::coqe_schema());
  std::mt19937_64 rng(106);
  std::size_t misses = 0, spurious = 0, planted = 0, deepest = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Example ex = fixtures::coqe_instance(rng);
    const Vocab vocab = fixtures::vocab_for(schema, {ex.text});
    OracleScorer oracle(ex.paths);
    const auto got = as_paths(extract(schema, vocab, oracle, ex.text, fixtures::small_engine(160, 96)));
    const auto want = maximal_paths(ex.paths);
    const std::set<Path> g(got.begin(), got.end()), w(want.begin(), want.end());
    for (const auto& p : w) {
      misses += g.count(p) == 0;
      deepest = std::max(deepest, p.size());
    }
    for (const auto& p : g) spurious += w.count(p) == 0;
    planted += w.size();
  }
  return {misses == 0 && spurious == 0 && deepest == 4,
          std::to_string(planted) + " planted paths on 100 instances (deepest " + std::to_string(deepest) + "): " +
              std::to_string(misses) + " missed, " + std::to_string(spurious) + " spurious"};
}

// Decoded spans keyed by prefix rather than group index.
std::set<std::tuple<Path, std::string, CharSpan>> keyed(const Query& q, const std::vector<TypedSpan>& spans) {
  std::set<std::tuple<Path, std::string, CharSpan>> out;
  for (const auto& s : spans) out.emplace(q.groups[static_cast<std::size_t>(s.group)].prefix.path, s.type, s.offsets);
  return out;
}

// A7
Outcome isolation_invariance() {
  std::mt19937_64 rng(107);
  QueryOptions opts;
  opts.max_len = 96;
  opts.max_prompt_len = 64;
  opts.sort_types = false;
  std::size_t changed = 0, decoded = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = fixtures::random_case(rng, 3, 2, Mode::Extract, opts, 10);
    auto dims = fixtures::tiny_dims(c.vocab.size(), 96);
    dims.hidden = 16;
    dims.layers = 2;
    const auto m = init_model<double>(dims, 3000 + trial, 0.5);
    auto groups = c.groups;
    std::reverse(groups.begin(), groups.end());
    for (auto& g : groups) std::shuffle(g.types.begin(), g.types.end(), rng);
    const auto tokens = tokenize(c.vocab, c.text);
    const Query p = build_query(c.schema, c.vocab, groups, c.text, tokens, Mode::Extract, opts);
    const auto a = keyed(c.query, decode_ie(forward_scores(m, c.query), c.query));
    const auto b = keyed(p, decode_ie(forward_scores(m, p), p));
    changed += a != b;
    decoded += a.size();
  }

  // Group-2 perturbation with a single encoder layer: every group-1 row must be bitwise identical.
  std::size_t differing_rows = 0;
  double relay = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = fixtures::random_case(rng, 3, 2, Mode::Extract, opts, 10);
    Query perturbed = c.query;
    for (std::size_t i = 0; i < perturbed.size(); ++i) {
      const auto slot = perturbed.roles[i].slot;
      if (perturbed.roles[i].group == 1 && (slot == Slot::Prefix || slot == Slot::Type))
        perturbed.token_ids[i] = Vocab::kReserved + static_cast<int>(rng() % (c.vocab.size() - Vocab::kReserved));
    }
    for (std::size_t layers : {1u, 2u}) {
      auto dims = fixtures::tiny_dims(c.vocab.size(), 96);
      dims.layers = layers;
      const auto m = init_model<double>(dims, 4000 + trial, 0.5);
      const auto h = encode(m, c.query), hp = encode(m, perturbed);
      for (std::size_t i = 0; i < c.query.size(); ++i) {
        if (c.query.roles[i].group != 0) continue;
        const auto r = static_cast<Eigen::Index>(i);
        if (layers == 1)
          differing_rows += !(h.row(r) == hp.row(r));
        else
          relay = std::max(relay, (h.row(r) - hp.row(r)).cwiseAbs().maxCoeff());
      }
    }
  }
  return {changed == 0 && differing_rows == 0,
          "permuted groups and types changed " + std::to_string(changed) + " of 100 decodes (" +
              std::to_string(decoded) + " spans); group-1 rows differing after group-2 perturbation: " +
              std::to_string(differing_rows) + " (1 layer); with 2 layers the text relays up to " + fmt(relay) +
              " into group 1"};
}

// A8
Outcome split_matches_unsplit() {
  const Schema schema = parse_schema(fixtures::kConll04Schema);
  std::mt19937_64 rng(108);
  std::size_t differ = 0, over_budget = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Example ex = fixtures::conll04_instance(rng, 3 + trial % 4);
    const Vocab vocab = fixtures::vocab_for(schema, {ex.text});
    auto run = [&](const EngineConfig& cfg, std::size_t& queries) {
      OracleScorer oracle(ex.paths);
      return as_paths(extract(schema, vocab, oracle, ex.text, cfg, [&](const Query&) { ++queries; }));
    };
    std::size_t whole = 0, split = 0;
    const auto a = run(fixtures::small_engine(400, 300), whole);
    const auto b = run(fixtures::small_engine(100, 16 + 8 * (trial % 3)), split);
    differ += a != b;
    over_budget += split > whole;
  }
  return {differ == 0 && over_budget == 100, std::to_string(differ) + " of 100 outputs differ; " +
                                                  std::to_string(over_budget) + " cases needed extra sub-queries"};
}

// A9
Outcome metric_conformance() {
  const auto r = strict_match_f1({"a", "b", "c", "d"}, {"a", "b", "x"});
  const bool hand = r.precision == 2.0 / 3.0 && r.recall == 0.5 && r.f1 == 4.0 / 7.0;
  std::mt19937_64 rng(109);
  std::size_t broken = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::set<std::string> g, p;
    for (auto n = rng() % 12; n > 0; --n) g.insert("k" + std::to_string(rng() % 16));
    for (auto n = rng() % 12; n > 0; --n) p.insert("k" + std::to_string(rng() % 16));
    const auto x = strict_match_f1(g, p), y = strict_match_f1(p, g);
    broken += !(x.precision == y.recall && x.recall == y.precision && x.f1 == y.f1);
  }
  return {hand && broken == 0, "hand case P=" + fmt(r.precision, 17) + " R=" + fmt(r.recall, 17) +
                                   " F1=" + fmt(r.f1, 17) + "; symmetry violations " + std::to_string(broken) +
                                   " of 1000"};
}

std::string run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SCHEMEX_CLI + "\" " + args + " 2>&1";
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  pclose(p);
  return out;
}

// A10
Outcome golden_renderings() {
  const std::string src = SCHEMEX_SOURCE_DIR;
  const std::string conll03 =
      "[CLS][P][T] location[T] miscellaneous[T] organization[T] person[Text] EU rejects German call to boycott British "
      "lamb .[SEP]\n";
  const std::string conll04_level2 =
      "[CLS][P] location: Morgan City[T] located in ( location )[P] location: Louisiana[T] located in ( location )[P] "
      "people: Lifa[T] kill ( people )[T] live in ( location )[T] work for ( organization )[Text] The self-propelled "
      "rig Avco 5 was headed to shore with 14 people aboard early Monday when it capsized about 20 miles off the "
      "Louisiana coast , near Morgan City , Lifa said.[SEP]\n";
  const std::string a = run_cli("dump-queries --set schema='" + src +
                                "/samples/conll03/schema.json' --text 'EU rejects German call to boycott British lamb .'");
  const std::string b = run_cli("dump-queries --set schema='" + src + "/samples/conll04/schema.json' --data '" + src +
                                "/samples/conll04/rig.jsonl'");
  const auto second = b.find('\n');
  const std::string b2 = second == std::string::npos ? "" : b.substr(second + 1);
  const bool ok03 = a == conll03, ok04 = b2 == conll04_level2;
  return {ok03 && ok04, std::string("CoNLL03 level 1 ") + (ok03 ? "matches" : "differs") + ", CoNLL04 level 2 " +
                            (ok04 ? "matches" : "differs") + " byte for byte"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, Outcome (*)()>> criteria = {
      {"A1", decode_matches_oracle},      {"A2", gradients_match_finite_differences},
      {"A3", closed_form_loss},           {"A4", rope_invariances},
      {"A5", overfit_toy_corpus},         {"A6", coqe_recursion_closure},
      {"A7", isolation_invariance},       {"A8", split_matches_unsplit},
      {"A9", metric_conformance},         {"A10", golden_renderings},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << id << (id.size() == 2 ? "  " : " ") << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
