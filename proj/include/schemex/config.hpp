#pragma once

// Flat `key = value` run configuration. Blank lines and lines starting with '#'
// are ignored; unknown keys are errors.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "schemex/error.hpp"
#include "schemex/schema.hpp"
#include "schemex/train.hpp"

namespace schemex {

struct Config {
  std::size_t max_len = 512;
  std::size_t max_prompt_len = 256;
  double delta_ie = 0.0;
  double delta_cls = 0.9;
  std::size_t hidden = 64;
  std::size_t head_dim = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ffn = 256;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double warmup_ratio = 0.1;
  double grad_clip = 2.0;
  std::size_t epochs = 50;
  std::size_t batch_size = 4;
  std::uint64_t seed = 13;
  double init_std = 0.02;
  std::size_t eval_every = 1;
  bool early_stop = false;
  bool isolation = true;
  bool rotary = true;
  bool sort_types = true;
  std::size_t max_depth = 4;
  std::string level_modes;  // comma-separated: ie, cls_single, cls_multi
  std::size_t jobs = 1;
  std::string schema;
  std::string data;
  std::string vocab;
  std::string checkpoint;

  friend bool operator==(const Config&, const Config&) = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <class F>
void visit_config(Config& c, F&& f) {
  f("max_len", c.max_len);
  f("max_prompt_len", c.max_prompt_len);
  f("delta_ie", c.delta_ie);
  f("delta_cls", c.delta_cls);
  f("hidden", c.hidden);
  f("head_dim", c.head_dim);
  f("layers", c.layers);
  f("heads", c.heads);
  f("ffn", c.ffn);
  f("learning_rate", c.learning_rate);
  f("weight_decay", c.weight_decay);
  f("warmup_ratio", c.warmup_ratio);
  f("grad_clip", c.grad_clip);
  f("epochs", c.epochs);
  f("batch_size", c.batch_size);
  f("seed", c.seed);
  f("init_std", c.init_std);
  f("eval_every", c.eval_every);
  f("early_stop", c.early_stop);
  f("isolation", c.isolation);
  f("rotary", c.rotary);
  f("sort_types", c.sort_types);
  f("max_depth", c.max_depth);
  f("level_modes", c.level_modes);
  f("jobs", c.jobs);
  f("schema", c.schema);
  f("data", c.data);
  f("vocab", c.vocab);
  f("checkpoint", c.checkpoint);
}

template <class V>
void parse_value(std::string_view key, const std::string& text, V& out) {
  auto bad = [&] { return Error(Errc::BadConfig, "config: bad value '" + text + "' for " + std::string(key)); };
  if constexpr (std::is_same_v<V, std::string>) {
    out = text;
  } else if constexpr (std::is_same_v<V, bool>) {
    if (text == "true" || text == "1")
      out = true;
    else if (text == "false" || text == "0")
      out = false;
    else
      throw bad();
  } else {
    const char* b = text.data();
    const char* e = b + text.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || p != e) throw bad();
  }
}

template <class V>
std::string format_value(const V& v) {
  if constexpr (std::is_same_v<V, std::string>)
    return v;
  else if constexpr (std::is_same_v<V, bool>)
    return v ? "true" : "false";
  else if constexpr (std::is_floating_point_v<V>)
    return format_double(v);
  else
    return std::to_string(v);
}

}  // namespace detail

inline void set_config_value(Config& c, std::string_view key, const std::string& value) {
  bool found = false;
  detail::visit_config(c, [&](std::string_view k, auto& field) {
    if (k == key) {
      detail::parse_value(k, value, field);
      found = true;
    }
  });
  if (!found) throw Error(Errc::BadConfig, "config: unknown key '" + std::string(key) + "'");
}

// Applies one `key=value` assignment.
inline void apply_assignment(Config& c, std::string_view line) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) throw Error(Errc::BadConfig, "config: expected key=value, got '" + std::string(line) + "'");
  set_config_value(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
}

inline Config parse_config(std::string_view text) {
  Config c;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    apply_assignment(c, t);
  }
  return c;
}

inline std::string render_config(const Config& c) {
  std::string out;
  Config copy = c;
  detail::visit_config(copy, [&](std::string_view k, auto& v) {
    out += std::string(k) + " = " + detail::format_value(v) + "\n";
  });
  return out;
}

inline Config load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::BadConfig, "config not found: '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

inline std::vector<Mode> level_modes(const Config& c) {
  std::vector<Mode> out;
  std::stringstream ss(c.level_modes);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (!item.empty()) out.push_back(parse_mode(item));
  }
  return out;
}

inline void validate_config(const Config& c) {
  auto bad = [](const std::string& why) { return Error(Errc::BadConfig, "config: " + why); };
  if (c.max_prompt_len >= c.max_len) throw bad("max_prompt_len must be smaller than max_len");
  if (!(c.delta_cls > 0.0 && c.delta_cls < 1.0)) throw bad("delta_cls must lie in (0, 1)");
  if (c.hidden == 0 || c.head_dim == 0 || c.heads == 0 || c.ffn == 0 || c.max_depth == 0)
    throw bad("dimensions must be positive");
  if (c.hidden % c.heads != 0) throw bad("hidden must be divisible by heads");
  if (c.head_dim % 2 != 0) throw Error(Errc::OddHeadDim, "config: head_dim must be even");
  if (c.learning_rate < 0 || c.weight_decay < 0 || c.grad_clip < 0) throw bad("optimizer settings must be non-negative");
  if (c.warmup_ratio < 0 || c.warmup_ratio > 1) throw bad("warmup_ratio must lie in [0, 1]");
  level_modes(c);
}

inline EngineConfig engine_config(const Config& c) {
  EngineConfig e;
  e.query.max_len = c.max_len;
  e.query.max_prompt_len = c.max_prompt_len;
  e.query.isolation = c.isolation;
  e.query.sort_types = c.sort_types;
  e.delta_ie = c.delta_ie;
  e.delta_cls = c.delta_cls;
  return e;
}

inline ModelDims model_dims(const Config& c, std::size_t vocab_size) {
  ModelDims d;
  d.vocab = vocab_size;
  d.hidden = c.hidden;
  d.head_dim = c.head_dim;
  d.layers = c.layers;
  d.heads = c.heads;
  d.ffn = c.ffn;
  d.max_len = c.max_len;
  d.rotary = c.rotary;
  return d;
}

inline TrainConfig train_config(const Config& c, std::size_t vocab_size) {
  TrainConfig t;
  t.dims = model_dims(c, vocab_size);
  t.optimizer.learning_rate = c.learning_rate;
  t.optimizer.weight_decay = c.weight_decay;
  t.optimizer.warmup_ratio = c.warmup_ratio;
  t.optimizer.grad_clip = c.grad_clip;
  t.engine = engine_config(c);
  t.epochs = c.epochs;
  t.batch_size = c.batch_size;
  t.seed = c.seed;
  t.init_std = c.init_std;
  t.eval_every = c.eval_every;
  t.early_stop = c.early_stop;
  return t;
}

// Reads the schema file named by the config and applies its level modes.
inline Schema load_schema(const Config& c) {
  std::ifstream f(c.schema, std::ios::binary);
  if (c.schema.empty() || !f) throw Error(Errc::Io, "schema not found: '" + c.schema + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  Schema s = parse_schema(ss.str());
  const auto modes = level_modes(c);
  apply_level_modes(s, modes);
  validate_schema(s, c.max_depth);
  return s;
}

}  // namespace schemex
