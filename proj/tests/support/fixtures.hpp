#pragma once

// Shared schemas, corpora and random generators for the test binaries.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "schemex/schemex.hpp"

namespace fixtures {

using namespace schemex;

inline const std::string kConll03Schema =
    R"J({"person": null, "location": null, "miscellaneous": null, "organization": null})J";

inline const std::string kConll04Schema =
    R"J({"organization": {"organization in ( location )": null}, "other": null, "location": {"located in ( location )": null}, )J"
    R"J("people": {"live in ( location )": null, "work for ( organization )": null, "kill ( people )": null}})J";

inline const std::string kRes16Schema =
    R"J({"aspect": {"positive ( opinion )": null, "neutral ( opinion )": null, "negative ( opinion )": null}, "opinion": null})J";

inline std::string coqe_schema() {
  const std::string op =
      R"J("worse ( opionion )": null, "equal ( opinion )": null, "better ( opinion )": null, "different ( opinion )": null)J";
  const std::string aspect = R"J("aspect": {)J" + op + "}";
  const std::string object = R"J("object": {)J" + aspect + ", " + op + "}";
  return R"J({"subject": {)J" + object + ", " + aspect + ", " + op + "}, " + object + ", " + aspect + ", " + op + "}";
}

// Two-level NER + RE schema used for the overfit corpus.
inline const std::string kToySchema =
    R"J({"person": {"works for ( organization )": null, "lives in ( location )": null}, "organization": null, "location": null})J";

inline Schema schema_of(const std::string& text, std::vector<Mode> modes = {}) {
  Schema s = parse_schema(text);
  apply_level_modes(s, modes);
  return s;
}

// Element for `surface` at its `occurrence`-th appearance in `text`.
inline PathElement elem(const std::string& text, const std::string& type, const std::string& surface,
                        std::size_t occurrence = 0) {
  std::size_t pos = text.find(surface);
  for (std::size_t k = 0; k < occurrence && pos != std::string::npos; ++k) pos = text.find(surface, pos + 1);
  if (pos == std::string::npos) throw std::runtime_error("fixture: '" + surface + "' not in text");
  return PathElement{type, CharSpan{pos, pos + surface.size()}, surface};
}

inline PathElement label(const std::string& type) { return PathElement{type, std::nullopt, {}}; }

inline Vocab vocab_for(const Schema& s, const std::vector<std::string>& texts) {
  std::vector<std::string> corpus = texts;
  if (corpus.empty()) corpus.emplace_back();
  return build_vocab(corpus, all_labels(s));
}

inline EngineConfig small_engine(std::size_t max_len = 96, std::size_t max_prompt_len = 48) {
  EngineConfig c;
  c.query.max_len = max_len;
  c.query.max_prompt_len = max_prompt_len;
  return c;
}

// Synthetic NER + RE corpus over kToySchema. Deterministic in `seed`.
inline std::vector<Example> synthetic_corpus(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> people = {"Alice Moreau", "Bruno", "Carla Diaz", "Dmitri", "Elena Kovac",
                                                  "Farid",        "Greta Lind", "Hugo",     "Ines Park", "Jonas"};
  static const std::vector<std::string> orgs = {"Acme Corp", "Borealis", "Cobalt Labs", "Dynamo", "Eastwind Bank",
                                                "Fjord Media"};
  static const std::vector<std::string> locs = {"Oslo", "Lima", "New Delhi", "Quito", "Cape Town", "Riga", "Perth"};
  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };

  std::vector<Example> out;
  while (out.size() < n) {
    const std::string p = pick(people), o = pick(orgs), l = pick(locs);
    std::string p2 = pick(people);
    while (p2 == p) p2 = pick(people);
    Example ex;
    const auto form = rng() % 5;
    if (form == 0) {
      ex.text = p + " works for " + o + " .";
      ex.paths = {{elem(ex.text, "person", p), elem(ex.text, "works for ( organization )", o)},
                  {elem(ex.text, "organization", o)}};
    } else if (form == 1) {
      ex.text = p + " lives in " + l + " .";
      ex.paths = {{elem(ex.text, "person", p), elem(ex.text, "lives in ( location )", l)},
                  {elem(ex.text, "location", l)}};
    } else if (form == 2) {
      ex.text = p + " , who works for " + o + " , lives in " + l + " .";
      ex.paths = {{elem(ex.text, "person", p), elem(ex.text, "works for ( organization )", o)},
                  {elem(ex.text, "person", p), elem(ex.text, "lives in ( location )", l)},
                  {elem(ex.text, "organization", o)},
                  {elem(ex.text, "location", l)}};
    } else if (form == 3) {
      ex.text = o + " opened an office in " + l + " .";
      ex.paths = {{elem(ex.text, "organization", o)}, {elem(ex.text, "location", l)}};
    } else {
      ex.text = p + " met " + p2 + " in " + l + " .";
      ex.paths = {{elem(ex.text, "person", p)}, {elem(ex.text, "person", p2)}, {elem(ex.text, "location", l)}};
    }
    out.push_back(std::move(ex));
  }
  return out;
}

inline std::string temp_path(const std::string& name) {
  static const std::string dir = [] {
    std::string d = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/schemex_test_" +
                    std::to_string(::getpid());
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir + "/" + name;
}

inline void write_text(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  f << body;
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace fixtures
