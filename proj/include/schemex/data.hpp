#pragma once

// Dataset records.
//
// One JSON object per line:
//   {"text": "...",
//    "paths": [[{"type": "person", "start": 0, "end": 14},
//               {"type": "educated at ( university )", "start": 40, "end": 58}],
//              [{"type": "positive", "label_only": true}]],
//    "mode": "ie" | "cls_single" | "cls_multi"}
// Offsets are character (byte) offsets into "text", end exclusive. "mode" is
// optional; when present it must agree with the schema's first level.

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "schemex/error.hpp"
#include "schemex/query.hpp"
#include "schemex/schema.hpp"
#include "schemex/tokenize.hpp"

namespace schemex {

struct Example {
  std::string text;
  std::vector<Path> paths;
  Mode mode = Mode::Extract;
};

// Drops duplicates and paths that are a proper prefix of another path; sorted.
inline std::vector<Path> maximal_paths(std::vector<Path> paths) {
  std::sort(paths.begin(), paths.end());
  paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
  std::vector<Path> out;
  for (const auto& p : paths) {
    bool is_prefix = false;
    for (const auto& q : paths)
      if (q.size() > p.size() && std::equal(p.begin(), p.end(), q.begin())) {
        is_prefix = true;
        break;
      }
    if (!is_prefix) out.push_back(p);
  }
  return out;
}

inline Example parse_record(const nlohmann::json& j, const Schema& schema) {
  auto bad = [](const std::string& why) { return Error(Errc::MalformedRecord, "data: " + why); };
  if (!j.is_object()) throw bad("record is not an object");
  if (!j.contains("text") || !j["text"].is_string()) throw bad("record lacks a string \"text\"");
  Example ex;
  ex.text = j["text"].get<std::string>();
  const Mode first_mode = schema.root.children.empty() ? Mode::Extract : schema.root.children.front().mode;
  ex.mode = first_mode;
  if (j.contains("mode")) {
    if (!j["mode"].is_string()) throw bad("\"mode\" must be a string");
    Mode m;
    try {
      m = parse_mode(j["mode"].get<std::string>());
    } catch (const Error&) {
      throw bad("unknown mode \"" + j["mode"].get<std::string>() + "\"");
    }
    if (m != first_mode)
      throw bad("record mode \"" + std::string(mode_name(m)) + "\" disagrees with schema level 1 mode \"" +
                std::string(mode_name(first_mode)) + "\"");
  }
  if (!j.contains("paths")) return ex;
  if (!j["paths"].is_array()) throw bad("\"paths\" must be an array");
  for (const auto& jp : j["paths"]) {
    if (!jp.is_array() || jp.empty()) throw bad("each path must be a non-empty array");
    Path path;
    const SchemaNode* node = &schema.root;
    for (const auto& je : jp) {
      if (!je.is_object() || !je.contains("type") || !je["type"].is_string()) throw bad("path element lacks \"type\"");
      PathElement e;
      e.type = je["type"].get<std::string>();
      const SchemaNode* next = node->child(e.type);
      if (!next) {
        std::string where = node->label.empty() ? "the root" : "\"" + node->label + "\"";
        throw Error(Errc::UnknownGoldType, "data: type \"" + e.type + "\" is not a child of " + where);
      }
      const bool label_only = je.value("label_only", false);
      if (label_only != is_classify(next->mode))
        throw bad("element \"" + e.type + "\" is " + (label_only ? "label-only" : "a span") + " but its level mode is " +
                  std::string(mode_name(next->mode)));
      if (!label_only) {
        if (!je.contains("start") || !je.contains("end") || !je["start"].is_number_integer() ||
            !je["end"].is_number_integer())
          throw bad("span element \"" + e.type + "\" needs integer start/end");
        const auto s = je["start"].get<long long>(), en = je["end"].get<long long>();
        if (s < 0 || en <= s || static_cast<std::size_t>(en) > ex.text.size())
          throw Error(Errc::OffsetOutOfRange, "data: span [" + std::to_string(s) + ", " + std::to_string(en) +
                                                  ") invalid for text of length " + std::to_string(ex.text.size()));
        e.span = CharSpan{static_cast<std::size_t>(s), static_cast<std::size_t>(en)};
        e.surface = span_text(ex.text, *e.span);
      }
      path.push_back(std::move(e));
      node = next;
    }
    ex.paths.push_back(std::move(path));
  }
  return ex;
}

inline std::vector<Example> parse_dataset(std::string_view contents, const Schema& schema) {
  std::vector<Example> out;
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::MalformedRecord, "data: line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      out.push_back(parse_record(j, schema));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::string read_file(const std::string& path, const std::string& what) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::Io, what + " not found: '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::vector<Example> load_dataset(const std::string& path, const Schema& schema) {
  return parse_dataset(read_file(path, "dataset"), schema);
}

inline nlohmann::ordered_json path_to_json(const Path& p) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : p) {
    nlohmann::ordered_json je;
    je["type"] = e.type;
    if (e.span) {
      je["surface"] = e.surface;
      je["start"] = e.span->start;
      je["end"] = e.span->end;
    } else {
      je["label_only"] = true;
    }
    arr.push_back(std::move(je));
  }
  return arr;
}

inline std::string dump_record(const Example& ex) {
  nlohmann::ordered_json j;
  j["text"] = ex.text;
  auto paths = nlohmann::ordered_json::array();
  for (const auto& p : ex.paths) {
    auto jp = path_to_json(p);
    for (auto& e : jp) e.erase("surface");
    paths.push_back(std::move(jp));
  }
  j["paths"] = std::move(paths);
  j["mode"] = std::string(mode_name(ex.mode));
  return j.dump();
}

// Every span must start and end on token boundaries of the text.
inline void check_alignment(const Example& ex) {
  const auto spans = split_tokens(ex.text);
  for (const auto& p : ex.paths)
    for (const auto& e : p) {
      if (!e.span) continue;
      const bool start_ok = std::any_of(spans.begin(), spans.end(), [&](auto s) { return s.start == e.span->start; });
      const bool end_ok = std::any_of(spans.begin(), spans.end(), [&](auto s) { return s.end == e.span->end; });
      if (!start_ok || !end_ok)
        throw Error(Errc::MisalignedSpan, "data: span \"" + e.surface + "\" [" + std::to_string(e.span->start) + ", " +
                                              std::to_string(e.span->end) + ") is not on token boundaries");
    }
}

// Converts a CoNLL04-shaped record {"tokens": [...], "entities": [{"type", "start", "end"}],
// "relations": [{"type", "head", "tail"}]} (token offsets, end exclusive) into an Example.
// Relation labels become "<relation> ( <object type> )".
inline Example convert_conll04(const nlohmann::json& j) {
  static const std::map<std::string, std::string> names = {
      {"Loc", "location"},         {"Org", "organization"},         {"Peop", "people"},
      {"Other", "other"},          {"Live_In", "live in"},          {"Work_For", "work for"},
      {"OrgBased_In", "organization in"}, {"Located_In", "located in"}, {"Kill", "kill"},
  };
  auto name = [&](const std::string& raw) {
    if (auto it = names.find(raw); it != names.end()) return it->second;
    std::string s = raw;
    std::replace(s.begin(), s.end(), '_', ' ');
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  };
  if (!j.contains("tokens") || !j["tokens"].is_array()) throw Error(Errc::MalformedRecord, "conll04: missing tokens");
  Example ex;
  std::vector<CharSpan> tok;
  for (const auto& t : j["tokens"]) {
    if (!ex.text.empty()) ex.text += ' ';
    const auto s = t.get<std::string>();
    tok.push_back({ex.text.size(), ex.text.size() + s.size()});
    ex.text += s;
  }
  std::vector<PathElement> ents;
  for (const auto& e : j.value("entities", nlohmann::json::array())) {
    const auto s = e.at("start").get<std::size_t>(), en = e.at("end").get<std::size_t>();
    if (en <= s || en > tok.size()) throw Error(Errc::OffsetOutOfRange, "conll04: entity token range out of bounds");
    PathElement pe{name(e.at("type").get<std::string>()), CharSpan{tok[s].start, tok[en - 1].end}, {}};
    pe.surface = span_text(ex.text, *pe.span);
    ents.push_back(std::move(pe));
  }
  std::vector<bool> is_head(ents.size(), false);
  for (const auto& r : j.value("relations", nlohmann::json::array())) {
    const auto h = r.at("head").get<std::size_t>(), t = r.at("tail").get<std::size_t>();
    if (h >= ents.size() || t >= ents.size()) throw Error(Errc::MalformedRecord, "conll04: relation refers to missing entity");
    is_head[h] = true;
    PathElement obj = ents[t];
    obj.type = name(r.at("type").get<std::string>()) + " ( " + ents[t].type + " )";
    ex.paths.push_back({ents[h], obj});
  }
  for (std::size_t i = 0; i < ents.size(); ++i)
    if (!is_head[i]) ex.paths.push_back({ents[i]});
  return ex;
}

}  // namespace schemex
