#pragma once

// Score matrices and the binary grid file used to replay them.
//
// Grid file layout (little-endian):
//   bytes 0..3   magic "SXSG"
//   u32          version (1)
//   u32          matrix count
//   per matrix:  u32 rows, u32 cols, rows*cols float32 in row-major order
// Masked cells are stored as -inf.

#include <Eigen/Core>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "schemex/error.hpp"
#include "schemex/query.hpp"

namespace schemex {

using ScoreGrid = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kMasked = -std::numeric_limits<double>::infinity();

// Pairwise logits aligned to one query; cells outside the scoring mask are -inf.
struct ScoreMatrix {
  ScoreGrid z;

  std::size_t size() const { return static_cast<std::size_t>(z.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  bool valid(std::size_t i, std::size_t j) const { return std::isfinite((*this)(i, j)); }
};

// Scores built straight from a target: `high` on gold cells, `low` on the rest of the mask.
inline ScoreMatrix scores_from_target(const Query& q, const TargetMatrix& t, double high = 5.0, double low = -5.0) {
  const auto n = static_cast<Eigen::Index>(q.size());
  ScoreMatrix s{ScoreGrid::Constant(n, n, kMasked)};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
      if (q.scoring_mask(a, b)) s.z(i, j) = t(a, b) ? high : low;
    }
  return s;
}

namespace detail {

static_assert(std::endian::native == std::endian::little, "grid and checkpoint files assume a little-endian host");

inline void put_u32(std::ostream& o, std::uint32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); }
inline void put_f32(std::ostream& o, float v) { o.write(reinterpret_cast<const char*>(&v), 4); }

inline std::uint32_t get_u32(std::istream& in, Errc err, const char* what) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw Error(err, std::string("truncated file reading ") + what);
  return v;
}

inline float get_f32(std::istream& in, Errc err) {
  float v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw Error(err, "truncated file reading values");
  return v;
}

}  // namespace detail

inline void write_score_grid(std::ostream& out, const std::vector<ScoreMatrix>& mats) {
  out.write("SXSG", 4);
  detail::put_u32(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(mats.size()));
  for (const auto& m : mats) {
    detail::put_u32(out, static_cast<std::uint32_t>(m.z.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(m.z.cols()));
    for (Eigen::Index i = 0; i < m.z.rows(); ++i)
      for (Eigen::Index j = 0; j < m.z.cols(); ++j) detail::put_f32(out, static_cast<float>(m.z(i, j)));
  }
}

inline std::vector<ScoreMatrix> read_score_grid(std::istream& in) {
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, "SXSG", 4) != 0)
    throw Error(Errc::BadScoreFile, "score grid: bad magic");
  if (detail::get_u32(in, Errc::BadScoreFile, "version") != 1)
    throw Error(Errc::BadScoreFile, "score grid: unsupported version");
  const std::uint32_t count = detail::get_u32(in, Errc::BadScoreFile, "count");
  std::vector<ScoreMatrix> out;
  out.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto rows = detail::get_u32(in, Errc::BadScoreFile, "rows");
    const auto cols = detail::get_u32(in, Errc::BadScoreFile, "cols");
    if (rows != cols || rows > 1u << 14) throw Error(Errc::BadScoreFile, "score grid: matrix must be square");
    ScoreMatrix m{ScoreGrid(rows, cols)};
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) {
        const float v = detail::get_f32(in, Errc::BadScoreFile);
        if (std::isnan(v)) throw Error(Errc::BadScoreFile, "score grid: NaN cell");
        m.z(i, j) = static_cast<double>(v);
      }
    out.push_back(std::move(m));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(Errc::BadScoreFile, "score grid: trailing bytes");
  return out;
}

inline void save_score_grid(const std::string& path, const std::vector<ScoreMatrix>& mats) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::Io, "cannot write score grid '" + path + "'");
  write_score_grid(f, mats);
}

inline std::vector<ScoreMatrix> load_score_grid(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::BadScoreFile, "score grid not found: '" + path + "'");
  return read_score_grid(f);
}

}  // namespace schemex
