#pragma once

// Checkpoint file layout (little-endian):
//
//   bytes 0..3  magic "SXCK"
//   u32         version (1)
//   u32 x 7     vocab, hidden, head_dim, layers, heads, ffn, max_len
//   u32         flags: bit 0 final_norm, bit 1 rotary
//   f64         rope_base
//   u32         tensor count
//   per tensor: u32 name length, name bytes, u32 rows, u32 cols,
//               rows*cols float32 in row-major order
//
// Tensors appear in visit_params() order. Writing the same model twice gives
// identical bytes.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "schemex/error.hpp"
#include "schemex/model.hpp"
#include "schemex/scores.hpp"

namespace schemex {

template <class T>
void write_checkpoint(std::ostream& out, const Model<T>& m) {
  using detail::put_u32;
  const auto& d = m.dims;
  out.write("SXCK", 4);
  put_u32(out, 1);
  for (std::size_t v : {d.vocab, d.hidden, d.head_dim, d.layers, d.heads, d.ffn, d.max_len})
    put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, (d.final_norm ? 1u : 0u) | (d.rotary ? 2u : 0u));
  out.write(reinterpret_cast<const char*>(&d.rope_base), 8);
  std::uint32_t count = 0;
  visit_params(m, [&](const std::string&, const Mat<T>&) { ++count; });
  put_u32(out, count);
  visit_params(m, [&](const std::string& name, const Mat<T>& t) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.cols()));
    for (Eigen::Index i = 0; i < t.size(); ++i) detail::put_f32(out, static_cast<float>(t.data()[i]));
  });
}

template <class T>
Model<T> read_checkpoint(std::istream& in) {
  constexpr Errc E = Errc::BadCheckpoint;
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, "SXCK", 4) != 0) throw Error(E, "checkpoint: bad magic");
  if (detail::get_u32(in, E, "version") != 1) throw Error(E, "checkpoint: unsupported version");
  ModelDims d;
  for (std::size_t* v : {&d.vocab, &d.hidden, &d.head_dim, &d.layers, &d.heads, &d.ffn, &d.max_len})
    *v = detail::get_u32(in, E, "dims");
  const auto flags = detail::get_u32(in, E, "flags");
  d.final_norm = flags & 1u;
  d.rotary = flags & 2u;
  if (!in.read(reinterpret_cast<char*>(&d.rope_base), 8)) throw Error(E, "checkpoint: truncated header");
  if (d.layers > 64 || d.hidden > 1u << 14 || d.vocab > 1u << 24) throw Error(E, "checkpoint: implausible dims");
  Model<T> m = zero_model<T>(d);
  std::uint32_t expected = 0;
  visit_params(m, [&](const std::string&, const Mat<T>&) { ++expected; });
  if (detail::get_u32(in, E, "count") != expected) throw Error(E, "checkpoint: tensor count mismatch");
  visit_params(m, [&](const std::string& name, Mat<T>& t) {
    const auto len = detail::get_u32(in, E, "name");
    if (len > 256) throw Error(E, "checkpoint: bad tensor name");
    std::string got(len, '\0');
    if (!in.read(got.data(), len)) throw Error(E, "checkpoint: truncated name");
    if (got != name) throw Error(E, "checkpoint: expected tensor '" + name + "', found '" + got + "'");
    const auto rows = detail::get_u32(in, E, "rows");
    const auto cols = detail::get_u32(in, E, "cols");
    if (rows != t.rows() || cols != t.cols()) throw Error(E, "checkpoint: shape mismatch for '" + name + "'");
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<T>(detail::get_f32(in, E));
  });
  if (in.peek() != std::char_traits<char>::eof()) throw Error(E, "checkpoint: trailing bytes");
  return m;
}

template <class T>
void save_checkpoint(const std::string& path, const Model<T>& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::Io, "cannot write checkpoint '" + path + "'");
  write_checkpoint(f, m);
}

template <class T>
Model<T> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::BadCheckpoint, "checkpoint not found: '" + path + "'");
  return read_checkpoint<T>(f);
}

}  // namespace schemex
