#pragma once

// Hierarchical type tree that drives the recursive queries.
//
// File format (UTF-8):
//
//   schema  := ws object ws EOF
//   object  := '{' ws [ member ( ws ',' ws member )* ] ws '}'
//   member  := string ws ':' ws ( object | "null" )
//   string  := '"' ( any byte except '"' and '\' | '\"' | '\\' | '\/' | '\n' | '\t' )* '"'
//   ws      := ( ' ' | '\t' | '\r' | '\n' )*
//
// Nested objects must be non-empty; leaves are written as null. Labels are kept
// verbatim, so "work for ( organization )" is one opaque label.

#include <algorithm>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "schemex/error.hpp"

namespace schemex {

enum class Mode { Extract, ClassifySingle, ClassifyMulti };

constexpr std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::Extract: return "ie";
    case Mode::ClassifySingle: return "cls_single";
    case Mode::ClassifyMulti: return "cls_multi";
  }
  return "ie";
}

inline Mode parse_mode(std::string_view s) {
  if (s == "ie" || s == "extract") return Mode::Extract;
  if (s == "cls_single") return Mode::ClassifySingle;
  if (s == "cls_multi") return Mode::ClassifyMulti;
  throw Error(Errc::BadConfig, "unknown mode '" + std::string(s) + "'");
}

constexpr bool is_classify(Mode m) { return m != Mode::Extract; }

struct SchemaNode {
  std::string label;
  // Sibling order follows the source file.
  std::vector<SchemaNode> children;
  Mode mode = Mode::Extract;

  bool is_leaf() const { return children.empty(); }

  const SchemaNode* child(std::string_view name) const {
    for (const auto& c : children)
      if (c.label == name) return &c;
    return nullptr;
  }

  friend bool operator==(const SchemaNode&, const SchemaNode&) = default;
};

struct Schema {
  SchemaNode root;
  std::size_t depth = 0;

  friend bool operator==(const Schema&, const Schema&) = default;
};

namespace detail {

inline std::size_t node_depth(const SchemaNode& n) {
  std::size_t best = 0;
  for (const auto& c : n.children) best = std::max(best, 1 + node_depth(c));
  return best;
}

class SchemaParser {
 public:
  explicit SchemaParser(std::string_view text) : s_(text) {}

  SchemaNode parse() {
    SchemaNode root;
    skip_ws();
    parse_object(root, 0);
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters after schema");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw Error(Errc::MalformedSchema, "schema: " + why + " at byte " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r' || s_[pos_] == '\n'))
      ++pos_;
  }

  void expect(char c) {
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      if (pos_ >= s_.size()) fail("unterminated string");
      char c = s_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("unterminated escape");
        char e = s_[pos_++];
        switch (e) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case '/': out += '/'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  void parse_object(SchemaNode& parent, int nesting) {
    if (nesting > 64) fail("nesting too deep");
    expect('{');
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '}') {
      ++pos_;
      if (nesting > 0) fail("empty nested object (use null for leaves)");
      return;
    }
    std::set<std::string> seen;
    while (true) {
      skip_ws();
      SchemaNode node;
      node.label = parse_string();
      if (node.label.empty()) fail("empty label");
      if (!seen.insert(node.label).second) fail("duplicate sibling label \"" + node.label + "\"");
      skip_ws();
      expect(':');
      skip_ws();
      if (s_.substr(pos_, 4) == "null") {
        pos_ += 4;
      } else if (pos_ < s_.size() && s_[pos_] == '{') {
        parse_object(node, nesting + 1);
      } else {
        fail("expected object or null");
      }
      parent.children.push_back(std::move(node));
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      return;
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline void render_node(const SchemaNode& n, std::string& out) {
  out += '{';
  bool first = true;
  for (const auto& c : n.children) {
    if (!first) out += ", ";
    first = false;
    out += '"';
    for (char ch : c.label) {
      switch (ch) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out += ch;
      }
    }
    out += "\": ";
    if (c.is_leaf())
      out += "null";
    else
      render_node(c, out);
  }
  out += '}';
}

inline void check_node(const SchemaNode& n) {
  std::set<std::string_view> seen;
  for (const auto& c : n.children) {
    if (c.label.empty()) throw Error(Errc::InvariantViolation, "schema: empty label");
    if (!seen.insert(c.label).second)
      throw Error(Errc::InvariantViolation, "schema: duplicate sibling label \"" + c.label + "\"");
    if (c.mode != n.children.front().mode)
      throw Error(Errc::InvariantViolation, "schema: siblings under \"" + n.label + "\" disagree on mode");
    check_node(c);
  }
}

inline void set_modes(SchemaNode& n, std::span<const Mode> modes, std::size_t level) {
  for (auto& c : n.children) {
    c.mode = level < modes.size() ? modes[level] : Mode::Extract;
    set_modes(c, modes, level + 1);
  }
}

}  // namespace detail

inline Schema parse_schema(std::string_view text) {
  Schema s;
  s.root = detail::SchemaParser(text).parse();
  s.depth = detail::node_depth(s.root);
  if (s.depth == 0) throw Error(Errc::MalformedSchema, "schema: no types declared");
  return s;
}

inline std::string render_schema(const Schema& s) {
  std::string out;
  detail::render_node(s.root, out);
  return out;
}

// Assigns the task mode of each level; levels past the end of `modes` extract.
inline void apply_level_modes(Schema& s, std::span<const Mode> modes) {
  detail::set_modes(s.root, modes, 0);
}

// Node reached by following `path` from the root, or nullptr.
inline const SchemaNode* find_node(const Schema& s, std::span<const std::string> path) {
  const SchemaNode* n = &s.root;
  for (const auto& label : path) {
    n = n->child(label);
    if (!n) return nullptr;
  }
  return n;
}

inline const SchemaNode& node_at(const Schema& s, std::span<const std::string> path) {
  const SchemaNode* n = find_node(s, path);
  if (!n) {
    std::string joined;
    for (const auto& p : path) joined += (joined.empty() ? "" : " / ") + p;
    throw Error(Errc::UnknownPath, "schema: unknown path [" + joined + "]");
  }
  return *n;
}

inline std::vector<std::string> children_of(const Schema& s, std::span<const std::string> path) {
  const SchemaNode& n = node_at(s, path);
  std::vector<std::string> out;
  out.reserve(n.children.size());
  for (const auto& c : n.children) out.push_back(c.label);
  return out;
}

inline void validate_schema(const Schema& s, std::size_t max_depth) {
  detail::check_node(s.root);
  std::size_t depth = detail::node_depth(s.root);
  if (depth == 0) throw Error(Errc::InvariantViolation, "schema: no types declared");
  if (depth != s.depth) throw Error(Errc::InvariantViolation, "schema: stale depth");
  if (depth > max_depth)
    throw Error(Errc::SchemaTooDeep,
                "schema: depth " + std::to_string(depth) + " exceeds max_depth " + std::to_string(max_depth));
}

// All root-to-leaf label paths, in file order.
inline std::vector<std::vector<std::string>> leaf_paths(const Schema& s) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> cur;
  auto walk = [&](auto&& self, const SchemaNode& n) -> void {
    for (const auto& c : n.children) {
      cur.push_back(c.label);
      if (c.is_leaf())
        out.push_back(cur);
      else
        self(self, c);
      cur.pop_back();
    }
  };
  walk(walk, s.root);
  return out;
}

// Every label appearing anywhere in the tree (duplicates kept once, first-seen order).
inline std::vector<std::string> all_labels(const Schema& s) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto walk = [&](auto&& self, const SchemaNode& n) -> void {
    for (const auto& c : n.children) {
      if (seen.insert(c.label).second) out.push_back(c.label);
      self(self, c);
    }
  };
  walk(walk, s.root);
  return out;
}

}  // namespace schemex
