#pragma once

// Extraction output: one JSON object per input text,
//   {"version": 1, "text": "...", "paths": [[{"type", "surface", "start", "end"}, ...], ...]}
// Classification elements are written as {"type": "...", "label_only": true}.
// Paths are sorted; keys always appear in the order shown.

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "schemex/data.hpp"
#include "schemex/engine.hpp"

namespace schemex {

inline constexpr int kRecordVersion = 1;

inline std::string extraction_record(std::string_view text, const std::vector<ExtractionPath>& paths) {
  nlohmann::ordered_json j;
  j["version"] = kRecordVersion;
  j["text"] = std::string(text);
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : paths) arr.push_back(path_to_json(p.elements));
  j["paths"] = std::move(arr);
  return j.dump();
}

}  // namespace schemex
