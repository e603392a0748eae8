#include <gtest/gtest.h>

#include <random>
#include <set>
#include <tuple>

#include "support/fixtures.hpp"
#include "support/random_cases.hpp"

using namespace schemex;

namespace {

using SpanKey = std::tuple<int, std::string, std::size_t, std::size_t>;  // group, type, start, end

// Set-builder reading of the linking rule, written against the query layout only.
std::set<SpanKey> brute_force(const ScoreMatrix& z, const Query& q, double delta) {
  auto on = [&](int a, int b) {
    const double v = z(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    return std::isfinite(v) && v >= delta;
  };
  std::set<SpanKey> out;
  for (int i = q.text_begin; i < q.text_end; ++i)
    for (int j = i; j < q.text_end; ++j)
      for (std::size_t g = 0; g < q.groups.size(); ++g)
        for (std::size_t y = 0; y < q.groups[g].types.size(); ++y) {
          const int k = q.groups[g].type_markers[y];
          if (on(i, j) && on(i, k) && on(k, j))
            out.emplace(static_cast<int>(g), q.groups[g].types[y],
                        q.text_offsets[static_cast<std::size_t>(i - q.text_begin)].start,
                        q.text_offsets[static_cast<std::size_t>(j - q.text_begin)].end);
        }
  return out;
}

std::set<SpanKey> keys(const std::vector<TypedSpan>& spans) {
  std::set<SpanKey> out;
  for (const auto& s : spans) out.emplace(s.group, s.type, s.offsets.start, s.offsets.end);
  return out;
}

struct Fixture {
  Schema schema;
  Vocab vocab;
  Query query;
};

Fixture level1(const std::string& schema_text, const std::string& text, std::vector<Mode> modes = {}) {
  Fixture f{fixtures::schema_of(schema_text, modes), {}, {}};
  f.vocab = fixtures::vocab_for(f.schema, {text});
  QueryOptions opts;
  std::vector<GroupSpec> g{{PrefixGroup{}, candidate_types(f.schema, {}, opts)}};
  f.query = build_query(f.schema, f.vocab, g, text, tokenize(f.vocab, text), f.schema.root.children.front().mode, opts);
  return f;
}

ScoreMatrix masked_zero(const Query& q, double fill) {
  const auto n = static_cast<Eigen::Index>(q.size());
  ScoreMatrix s{ScoreGrid::Constant(n, n, kMasked)};
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j)
      if (q.scoring_mask(i, j)) s.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fill;
  return s;
}

void set(ScoreMatrix& s, int i, int j, double v) { s.z(i, j) = v; }

}  // namespace

TEST(Threshold, InclusiveAndMaskAware) {
  ScoreMatrix s{ScoreGrid(2, 2)};
  s.z << 0.0, -0.1, kMasked, 3.0;
  const BoolMatrix t = threshold(s, 0.0);
  EXPECT_TRUE(t(0, 0));
  EXPECT_FALSE(t(0, 1));
  EXPECT_FALSE(t(1, 0));
  EXPECT_TRUE(t(1, 1));
  EXPECT_FALSE(threshold(s, -1e300)(1, 0));
}

TEST(DecodeIe, LinkingExample) {
  const std::string text = "Steve Jobs founded Apple";
  const auto f = level1(R"J({"person": null, "org": null})J", text);
  const Query& q = f.query;
  const TargetMatrix t =
      build_target(q, std::vector<Gold>{{0, "person", CharSpan{0, 10}}, {0, "org", CharSpan{19, 24}}});
  const auto spans = decode_ie(scores_from_target(q, t), q);
  ASSERT_EQ(spans.size(), 2u);
  std::set<std::pair<std::string, std::string>> got;
  for (const auto& s : spans) got.emplace(s.type, s.surface);
  EXPECT_EQ(got, (std::set<std::pair<std::string, std::string>>{{"person", "Steve Jobs"}, {"org", "Apple"}}));
}

TEST(DecodeIe, NeedsAllThreeLinks) {
  const std::string text = "Steve Jobs founded Apple";
  const auto f = level1(R"J({"person": null})J", text);
  const Query& q = f.query;
  const int steve = q.text_begin, jobs = steve + 1, k = q.groups[0].type_markers[0];
  for (int drop = 0; drop < 4; ++drop) {
    ScoreMatrix s = masked_zero(q, -1.0);
    if (drop != 0) set(s, steve, jobs, 1.0);
    if (drop != 1) set(s, steve, k, 1.0);
    if (drop != 2) set(s, k, jobs, 1.0);
    EXPECT_EQ(decode_ie(s, q).size(), drop == 3 ? 1u : 0u) << drop;
  }
}

TEST(DecodeIe, BoundaryValueIsActive) {
  const auto f = level1(R"J({"person": null})J", "Lifa");
  const Query& q = f.query;
  const int w = q.text_begin, k = q.groups[0].type_markers[0];
  ScoreMatrix s = masked_zero(q, -3.0);
  set(s, w, w, 0.0);
  set(s, w, k, 0.0);
  set(s, k, w, 0.0);
  EXPECT_EQ(decode_ie(s, q, 0.0).size(), 1u);
  EXPECT_EQ(decode_ie(s, q, 1e-12).size(), 0u);
}

TEST(DecodeIe, NoTypeMarkersMeansNoSpans) {
  const auto f = level1(R"J({"person": null})J", "a b c");
  Query q = f.query;
  for (auto& g : q.groups) g.type_markers.clear();
  EXPECT_TRUE(decode_ie(masked_zero(q, 5.0), q).empty());
}

TEST(DecodeIe, EmptyTextDecodesNothing) {
  const auto f = level1(R"J({"person": null})J", "");
  EXPECT_TRUE(decode_ie(masked_zero(f.query, 5.0), f.query).empty());
}

TEST(DecodeIeProperty, MatchesBruteForce) {
  std::mt19937_64 rng(21);
  QueryOptions opts;
  opts.max_len = 160;
  opts.max_prompt_len = 96;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t types = 1 + rng() % 4, groups = 1 + rng() % 2;
    const auto c = fixtures::random_case(rng, types, groups, Mode::Extract, opts, 2 + rng() % 23);
    const ScoreMatrix z = fixtures::random_scores(rng, c.query);
    const double delta = static_cast<double>(rng() % 3) - 1.0;
    const auto fast = decode_ie(z, c.query, delta);
    EXPECT_EQ(keys(fast), brute_force(z, c.query, delta)) << trial;
    EXPECT_EQ(fast, oracle_decode(z, c.query, delta)) << trial;
  }
}

TEST(DecodeIeProperty, MonotoneInThreshold) {
  std::mt19937_64 rng(22);
  QueryOptions opts;
  opts.max_len = 160;
  opts.max_prompt_len = 96;
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = fixtures::random_case(rng, 1 + rng() % 4, 1, Mode::Extract, opts, 12);
    const ScoreMatrix z = fixtures::random_scores(rng, c.query);
    auto prev = keys(decode_ie(z, c.query, -3.0));
    for (double d : {-1.0, -0.5, 0.0, 0.5, 1.0, 3.0}) {
      const auto cur = keys(decode_ie(z, c.query, d));
      EXPECT_TRUE(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
      prev = cur;
    }
  }
}

TEST(DecodeIeProperty, SpansStayInsideText) {
  std::mt19937_64 rng(23);
  QueryOptions opts;
  opts.max_len = 160;
  opts.max_prompt_len = 96;
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = fixtures::random_case(rng, 3, 2, Mode::Extract, opts, 10);
    // Fill the whole grid, masked cells included, to tempt spans across markers.
    ScoreMatrix z{ScoreGrid::Constant(static_cast<Eigen::Index>(c.query.size()),
                                      static_cast<Eigen::Index>(c.query.size()), 1.0)};
    for (const auto& s : decode_ie(z, c.query)) {
      EXPECT_GE(s.head, c.query.text_begin);
      EXPECT_LE(s.head, s.tail);
      EXPECT_LT(s.tail, c.query.text_end);
      EXPECT_EQ(s.surface, span_text(c.text, s.offsets));
    }
  }
}

TEST(DecodeCls, SingleLabelExamples) {
  const auto f = level1(R"J({"A": null, "B": null})J", "x", {Mode::ClassifySingle});
  const Query& q = f.query;
  const int c = q.cls_token, a = q.groups[0].type_markers[0], b = q.groups[0].type_markers[1];
  auto logit = [](double p) { return std::log(p / (1 - p)); };
  ScoreMatrix s = masked_zero(q, 0.0);
  set(s, c, a, logit(0.9));
  set(s, a, c, logit(0.8));
  set(s, c, b, logit(0.95));
  set(s, b, c, logit(0.6));
  const auto d = decode_cls_single(s, q);
  EXPECT_EQ(d.labels, (std::vector<std::string>{"A"}));
  EXPECT_NEAR(d.score, 0.72, 1e-12);

  // Shifting every cell by a constant keeps the argmax.
  ScoreMatrix shifted = s;
  for (int i : {c, a, b})
    for (int j : {c, a, b})
      if (std::isfinite(shifted.z(i, j))) shifted.z(i, j) += 2.5;
  EXPECT_EQ(decode_cls_single(shifted, q).labels, d.labels);
}

TEST(DecodeCls, SingleLabelTiesAndSingleCandidate) {
  const auto f = level1(R"J({"A": null, "B": null, "C": null})J", "x", {Mode::ClassifySingle});
  EXPECT_EQ(decode_cls_single(masked_zero(f.query, 0.3), f.query).labels, (std::vector<std::string>{"A"}));

  const auto one = level1(R"J({"only": null})J", "x", {Mode::ClassifySingle});
  const auto d = decode_cls_single(masked_zero(one.query, -9.0), one.query);
  EXPECT_EQ(d.labels, (std::vector<std::string>{"only"}));
}

TEST(DecodeCls, SingleLabelNeedsCandidates) {
  auto f = level1(R"J({"A": null})J", "x", {Mode::ClassifySingle});
  f.query.groups[0].types.clear();
  f.query.groups[0].type_markers.clear();
  try {
    decode_cls_single(masked_zero(f.query, 0.0), f.query);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoCandidates);
  }
  const auto ie = level1(R"J({"A": null})J", "x");
  EXPECT_THROW(decode_cls_single(masked_zero(ie.query, 0.0), ie.query), Error);
}

TEST(DecodeCls, MultiLabelStrictThreshold) {
  const auto f = level1(R"J({"A": null, "B": null, "C": null})J", "x", {Mode::ClassifyMulti});
  const Query& q = f.query;
  const int c = q.cls_token;
  const auto& m = q.groups[0].type_markers;
  auto logit = [](double p) { return std::log(p / (1 - p)); };
  ScoreMatrix s = masked_zero(q, -4.0);
  set(s, c, m[0], logit(0.95));
  set(s, m[0], c, logit(0.97));
  set(s, c, m[1], 10.0);
  set(s, m[1], c, logit(0.5));  // only one side passes
  set(s, c, m[2], logit(0.99));
  set(s, m[2], c, logit(0.99));
  EXPECT_EQ(decode_cls_multi(s, q).labels, (std::vector<std::string>{"A", "C"}));
  EXPECT_TRUE(decode_cls_multi(masked_zero(q, -4.0), q).empty());

  // Exactly at the threshold is not enough.
  ScoreMatrix edge = masked_zero(q, -4.0);
  set(edge, c, m[0], 1e6);
  set(edge, m[0], c, logit(0.9));
  EXPECT_TRUE(decode_cls_multi(edge, q, 0, sigmoid(logit(0.9))).empty());
}

TEST(DecodeCls, MultiLabelMatchesSetBuilder) {
  const auto f = level1(R"J({"a": null, "b": null, "c": null, "d": null, "e": null, "f": null, "g": null, "h": null})J",
                        "x y", {Mode::ClassifyMulti});
  const Query& q = f.query;
  std::mt19937_64 rng(24);
  std::normal_distribution<double> normal(2.0, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    ScoreMatrix s = masked_zero(q, 0.0);
    for (std::size_t i = 0; i < q.size(); ++i)
      for (std::size_t j = 0; j < q.size(); ++j)
        if (q.scoring_mask(i, j)) s.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = normal(rng);
    std::vector<std::string> want;
    const auto c = static_cast<std::size_t>(q.cls_token);
    for (std::size_t y = 0; y < 8; ++y) {
      const auto k = static_cast<std::size_t>(q.groups[0].type_markers[y]);
      if (1 / (1 + std::exp(-s(c, k))) > 0.9 && 1 / (1 + std::exp(-s(k, c))) > 0.9) want.push_back(q.groups[0].types[y]);
    }
    EXPECT_EQ(decode_cls_multi(s, q).labels, want);
  }
}

TEST(ActiveLinks, RegionsAreLabelled) {
  const std::string text = "Steve Jobs";
  const auto f = level1(R"J({"person": null})J", text);
  const Query& q = f.query;
  const TargetMatrix t = build_target(q, std::vector<Gold>{{0, "person", CharSpan{0, 10}}});
  const auto links = active_links(scores_from_target(q, t), q, 0.0);
  ASSERT_EQ(links.size(), 3u);
  std::multiset<int> kinds;
  for (const auto& l : links) kinds.insert(static_cast<int>(l.kind));
  EXPECT_EQ(kinds, (std::multiset<int>{static_cast<int>(LinkKind::HeadTail), static_cast<int>(LinkKind::HeadType),
                                        static_cast<int>(LinkKind::TypeTail)}));
}
