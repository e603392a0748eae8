#pragma once

// Reference encoder, rotary scoring head, circle loss, and exact reverse-mode
// gradients. Everything is templated on the scalar so the same code runs in
// float for training and in double for gradient checks.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "schemex/error.hpp"
#include "schemex/query.hpp"
#include "schemex/scores.hpp"

namespace schemex {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
using ColVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct ModelDims {
  std::size_t vocab = 0;
  std::size_t hidden = 64;
  std::size_t head_dim = 64;  // d' of the scoring head
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ffn = 256;
  std::size_t max_len = 512;
  bool final_norm = true;
  bool rotary = true;
  double rope_base = 10000.0;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;

  void validate() const {
    if (vocab == 0 || hidden == 0 || head_dim == 0 || heads == 0 || ffn == 0 || max_len == 0)
      throw Error(Errc::DimensionMismatch, "model: dimensions must be positive");
    if (hidden % heads != 0) throw Error(Errc::DimensionMismatch, "model: hidden size not divisible by heads");
    if (head_dim % 2 != 0) throw Error(Errc::OddHeadDim, "model: scoring head dimension must be even");
  }
};

template <class T>
struct LayerParams {
  Mat<T> ln1_g, ln1_b;
  Mat<T> wq, bq, wk, bk, wv, bv, wo, bo;
  Mat<T> ln2_g, ln2_b;
  Mat<T> w1, b1, w2, b2;
};

template <class T>
struct Model {
  ModelDims dims;
  Mat<T> tok_emb, pos_emb, type_emb;
  std::vector<LayerParams<T>> layers;
  Mat<T> final_g, final_b;
  // Scoring head: FFNN_q and FFNN_k, one affine map each.
  Mat<T> head_wq, head_bq, head_wk, head_bk;
};

// Calls f(name, tensor) for every parameter tensor, in checkpoint order.
template <class M, class F>
void visit_params(M& m, F&& f) {
  f(std::string("encoder.tok_emb"), m.tok_emb);
  f(std::string("encoder.pos_emb"), m.pos_emb);
  f(std::string("encoder.type_emb"), m.type_emb);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    auto& L = m.layers[l];
    const std::string p = "encoder.layer" + std::to_string(l) + ".";
    f(p + "ln1.gain", L.ln1_g);
    f(p + "ln1.bias", L.ln1_b);
    f(p + "attn.wq", L.wq);
    f(p + "attn.bq.bias", L.bq);
    f(p + "attn.wk", L.wk);
    f(p + "attn.bk.bias", L.bk);
    f(p + "attn.wv", L.wv);
    f(p + "attn.bv.bias", L.bv);
    f(p + "attn.wo", L.wo);
    f(p + "attn.bo.bias", L.bo);
    f(p + "ln2.gain", L.ln2_g);
    f(p + "ln2.bias", L.ln2_b);
    f(p + "ffn.w1", L.w1);
    f(p + "ffn.b1.bias", L.b1);
    f(p + "ffn.w2", L.w2);
    f(p + "ffn.b2.bias", L.b2);
  }
  f(std::string("encoder.final.gain"), m.final_g);
  f(std::string("encoder.final.bias"), m.final_b);
  f(std::string("head.wq"), m.head_wq);
  f(std::string("head.bq.bias"), m.head_bq);
  f(std::string("head.wk"), m.head_wk);
  f(std::string("head.bk.bias"), m.head_bk);
}

template <class T>
std::vector<Mat<T>*> param_list(Model<T>& m) {
  std::vector<Mat<T>*> out;
  visit_params(m, [&](const std::string&, Mat<T>& t) { out.push_back(&t); });
  return out;
}

template <class T>
std::vector<const Mat<T>*> param_list(const Model<T>& m) {
  std::vector<const Mat<T>*> out;
  visit_params(m, [&](const std::string&, const Mat<T>& t) { out.push_back(&t); });
  return out;
}

// Model with every tensor allocated to its shape and zero-filled.
template <class T>
Model<T> zero_model(const ModelDims& d) {
  d.validate();
  const auto H = static_cast<Eigen::Index>(d.hidden);
  const auto F = static_cast<Eigen::Index>(d.ffn);
  const auto D = static_cast<Eigen::Index>(d.head_dim);
  Model<T> m;
  m.dims = d;
  m.tok_emb = Mat<T>::Zero(static_cast<Eigen::Index>(d.vocab), H);
  m.pos_emb = Mat<T>::Zero(static_cast<Eigen::Index>(d.max_len), H);
  m.type_emb = Mat<T>::Zero(4, H);
  m.layers.resize(d.layers);
  for (auto& L : m.layers) {
    L.ln1_g = Mat<T>::Zero(1, H);
    L.ln1_b = Mat<T>::Zero(1, H);
    for (auto* w : {&L.wq, &L.wk, &L.wv, &L.wo}) *w = Mat<T>::Zero(H, H);
    for (auto* b : {&L.bq, &L.bk, &L.bv, &L.bo}) *b = Mat<T>::Zero(1, H);
    L.ln2_g = Mat<T>::Zero(1, H);
    L.ln2_b = Mat<T>::Zero(1, H);
    L.w1 = Mat<T>::Zero(H, F);
    L.b1 = Mat<T>::Zero(1, F);
    L.w2 = Mat<T>::Zero(F, H);
    L.b2 = Mat<T>::Zero(1, H);
  }
  m.final_g = Mat<T>::Zero(1, H);
  m.final_b = Mat<T>::Zero(1, H);
  m.head_wq = Mat<T>::Zero(H, D);
  m.head_bq = Mat<T>::Zero(1, D);
  m.head_wk = Mat<T>::Zero(H, D);
  m.head_bk = Mat<T>::Zero(1, D);
  return m;
}

template <class T>
Model<T> init_model(const ModelDims& d, std::uint64_t seed, double stddev = 0.02) {
  Model<T> m = zero_model<T>(d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  visit_params(m, [&](const std::string& name, Mat<T>& t) {
    if (name.ends_with(".gain")) {
      t.setOnes();
    } else if (!name.ends_with(".bias")) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<T>(normal(rng));
    }
  });
  return m;
}

template <class To, class From>
Model<To> cast_model(const Model<From>& src) {
  Model<To> dst = zero_model<To>(src.dims);
  auto s = param_list(src);
  auto d = param_list(dst);
  for (std::size_t i = 0; i < s.size(); ++i) *d[i] = s[i]->template cast<To>();
  return dst;
}

namespace detail {

template <class T>
struct NormCache {
  Mat<T> xhat;
  ColVec<T> rstd;
};

template <class T>
Mat<T> layer_norm(const Mat<T>& x, const Mat<T>& g, const Mat<T>& b, NormCache<T>& c) {
  constexpr T eps = static_cast<T>(1e-5);
  const auto n = x.rows();
  const auto d = x.cols();
  c.xhat.resize(n, d);
  c.rstd.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mu = x.row(i).mean();
    const T var = (x.row(i).array() - mu).square().mean();
    const T r = T(1) / std::sqrt(var + eps);
    c.rstd(i) = r;
    c.xhat.row(i) = (x.row(i).array() - mu) * r;
  }
  Mat<T> y = c.xhat.array().rowwise() * g.row(0).array();
  y.rowwise() += b.row(0);
  return y;
}

template <class T>
Mat<T> layer_norm_backward(const Mat<T>& dy, const Mat<T>& g, const NormCache<T>& c, Mat<T>& dg, Mat<T>& db) {
  dg.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  db.row(0) += dy.colwise().sum();
  Mat<T> dxhat = dy.array().rowwise() * g.row(0).array();
  Mat<T> dx(dy.rows(), dy.cols());
  const T inv_d = T(1) / static_cast<T>(dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const T m1 = dxhat.row(i).sum() * inv_d;
    const T m2 = (dxhat.row(i).array() * c.xhat.row(i).array()).sum() * inv_d;
    dx.row(i) = c.rstd(i) * (dxhat.row(i).array() - m1 - c.xhat.row(i).array() * m2);
  }
  return dx;
}

template <class T>
T gelu(T u) {
  const T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  return T(0.5) * u * (T(1) + std::tanh(c * (u + static_cast<T>(0.044715) * u * u * u)));
}

template <class T>
T gelu_grad(T u) {
  const T c = static_cast<T>(0.7978845608028654);
  const T a = static_cast<T>(0.044715);
  const T t = std::tanh(c * (u + a * u * u * u));
  return T(0.5) * (T(1) + t) + T(0.5) * u * (T(1) - t * t) * c * (T(1) + T(3) * a * u * u);
}

template <class T>
Mat<T> affine(const Mat<T>& x, const Mat<T>& w, const Mat<T>& b) {
  Mat<T> y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

// Rotates coordinate pairs (2t, 2t+1) of each row by position * base^(-2t/d).
// `sign` = -1 applies the inverse rotation.
template <class T>
Mat<T> rope(const Mat<T>& x, const std::vector<int>& positions, double base, int sign = 1) {
  Mat<T> y(x.rows(), x.cols());
  const auto d = x.cols();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double p = positions[static_cast<std::size_t>(i)];
    for (Eigen::Index t = 0; t < d / 2; ++t) {
      const double theta = std::pow(base, -2.0 * static_cast<double>(t) / static_cast<double>(d));
      const T cs = static_cast<T>(std::cos(p * theta));
      const T sn = static_cast<T>(sign * std::sin(p * theta));
      const T a = x(i, 2 * t), b = x(i, 2 * t + 1);
      y(i, 2 * t) = a * cs - b * sn;
      y(i, 2 * t + 1) = a * sn + b * cs;
    }
  }
  return y;
}

template <class T>
struct LayerCache {
  Mat<T> x;
  NormCache<T> ln1;
  Mat<T> a, q, k, v, o;
  std::vector<Mat<T>> probs;
  Mat<T> y;
  NormCache<T> ln2;
  Mat<T> b, u, g;
};

template <class T>
struct ForwardCache {
  std::vector<LayerCache<T>> layers;
  NormCache<T> final_ln;
  Mat<T> h;
  Mat<T> qs, ks;  // head projections before rotation
  Mat<T> qr, kr;  // after rotation
  Mat<T> z;
};

}  // namespace detail

template <class T>
void check_query_fits(const Model<T>& m, const Query& q) {
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q.token_ids[i] < 0 || static_cast<std::size_t>(q.token_ids[i]) >= m.dims.vocab)
      throw Error(Errc::DimensionMismatch, "model: token id " + std::to_string(q.token_ids[i]) + " outside vocab");
    if (q.position_ids[i] < 0 || static_cast<std::size_t>(q.position_ids[i]) >= m.dims.max_len)
      throw Error(Errc::DimensionMismatch, "model: position id " + std::to_string(q.position_ids[i]) +
                                               " outside position table");
    if (q.token_type_ids[i] < 0 || q.token_type_ids[i] > 3)
      throw Error(Errc::DimensionMismatch, "model: token type id out of range");
  }
}

// Pre-norm transformer stack; returns n x hidden.
template <class T>
Mat<T> encode(const Model<T>& m, const Query& q, detail::ForwardCache<T>* cache = nullptr) {
  check_query_fits(m, q);
  const auto n = static_cast<Eigen::Index>(q.size());
  const auto H = static_cast<Eigen::Index>(m.dims.hidden);
  const auto heads = static_cast<Eigen::Index>(m.dims.heads);
  const auto dh = H / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  constexpr T neg_inf = -std::numeric_limits<T>::infinity();

  detail::ForwardCache<T> local;
  detail::ForwardCache<T>& c = cache ? *cache : local;
  c.layers.assign(m.layers.size(), {});

  Mat<T> x(n, H);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    x.row(i) = m.tok_emb.row(q.token_ids[k]) + m.pos_emb.row(q.position_ids[k]) + m.type_emb.row(q.token_type_ids[k]);
  }

  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& L = m.layers[l];
    auto& lc = c.layers[l];
    lc.x = x;
    lc.a = detail::layer_norm(x, L.ln1_g, L.ln1_b, lc.ln1);
    lc.q = detail::affine(lc.a, L.wq, L.bq);
    lc.k = detail::affine(lc.a, L.wk, L.bk);
    lc.v = detail::affine(lc.a, L.wv, L.bv);
    lc.o.resize(n, H);
    lc.probs.resize(static_cast<std::size_t>(heads));
    for (Eigen::Index h = 0; h < heads; ++h) {
      Mat<T> s = lc.q.middleCols(h * dh, dh) * lc.k.middleCols(h * dh, dh).transpose();
      for (Eigen::Index i = 0; i < n; ++i) {
        T mx = neg_inf;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (q.attention_mask(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) {
            s(i, j) *= scale;
            mx = std::max(mx, s(i, j));
          } else {
            s(i, j) = neg_inf;
          }
        }
        T sum = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
          s(i, j) = s(i, j) == neg_inf ? T(0) : std::exp(s(i, j) - mx);
          sum += s(i, j);
        }
        s.row(i) /= sum;
      }
      lc.o.middleCols(h * dh, dh) = s * lc.v.middleCols(h * dh, dh);
      lc.probs[static_cast<std::size_t>(h)] = std::move(s);
    }
    lc.y = x + detail::affine(lc.o, L.wo, L.bo);
    lc.b = detail::layer_norm(lc.y, L.ln2_g, L.ln2_b, lc.ln2);
    lc.u = detail::affine(lc.b, L.w1, L.b1);
    lc.g = lc.u.unaryExpr([](T u) { return detail::gelu(u); });
    x = lc.y + detail::affine(lc.g, L.w2, L.b2);
  }

  if (m.dims.final_norm)
    c.h = detail::layer_norm(x, m.final_g, m.final_b, c.final_ln);
  else
    c.h = x;
  return c.h;
}

// Pairwise logits of the rotary head, masked by the query's scoring mask.
template <class T>
Mat<T> score_logits(const Model<T>& m, const Mat<T>& hidden, const Query& q, detail::ForwardCache<T>* cache = nullptr) {
  if (static_cast<std::size_t>(hidden.rows()) != q.size())
    throw Error(Errc::DimensionMismatch, "model: hidden rows do not match query length");
  if (m.dims.head_dim % 2 != 0) throw Error(Errc::OddHeadDim, "model: scoring head dimension must be even");
  detail::ForwardCache<T> local;
  detail::ForwardCache<T>& c = cache ? *cache : local;
  c.qs = detail::affine(hidden, m.head_wq, m.head_bq);
  c.ks = detail::affine(hidden, m.head_wk, m.head_bk);
  if (m.dims.rotary) {
    c.qr = detail::rope(c.qs, q.position_ids, m.dims.rope_base);
    c.kr = detail::rope(c.ks, q.position_ids, m.dims.rope_base);
  } else {
    c.qr = c.qs;
    c.kr = c.ks;
  }
  c.z = c.qr * c.kr.transpose();
  const auto n = static_cast<Eigen::Index>(q.size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (!q.scoring_mask(static_cast<std::size_t>(i), static_cast<std::size_t>(j)))
        c.z(i, j) = -std::numeric_limits<T>::infinity();
  return c.z;
}

template <class T>
ScoreMatrix score(const Model<T>& m, const Mat<T>& hidden, const Query& q) {
  return ScoreMatrix{score_logits(m, hidden, q).template cast<double>()};
}

template <class T>
ScoreMatrix forward_scores(const Model<T>& m, const Query& q) {
  return score(m, encode(m, q), q);
}

// log(1 + sum_{neg} e^z) + log(1 + sum_{pos} e^-z) over cells where `valid` holds.
// Writes dL/dz into `dz` (zero elsewhere) when given.
template <class T>
T circle_loss(const Mat<T>& z, const BoolMatrix& valid, const TargetMatrix& target, Mat<T>* dz = nullptr) {
  const auto n = z.rows();
  if (static_cast<std::size_t>(n) != valid.size() || valid.size() != target.size() || z.cols() != n)
    throw Error(Errc::ShapeMismatch, "model: score and target shapes differ");
  T max_neg = 0, max_pos = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
      if (!valid(a, b)) continue;
      if (target(a, b))
        max_pos = std::max(max_pos, -z(i, j));
      else
        max_neg = std::max(max_neg, z(i, j));
    }
  T sum_neg = std::exp(-max_neg), sum_pos = std::exp(-max_pos);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
      if (!valid(a, b)) continue;
      if (target(a, b))
        sum_pos += std::exp(-z(i, j) - max_pos);
      else
        sum_neg += std::exp(z(i, j) - max_neg);
    }
  const T lse_neg = max_neg + std::log(sum_neg);
  const T lse_pos = max_pos + std::log(sum_pos);
  if (dz) {
    dz->setZero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
        if (!valid(a, b)) continue;
        if (target(a, b))
          (*dz)(i, j) = -std::exp(-z(i, j) - lse_pos);
        else
          (*dz)(i, j) = std::exp(z(i, j) - lse_neg);
      }
  }
  return lse_neg + lse_pos;
}

// Loss on an already-masked score matrix: the valid cells are the finite ones.
inline double circle_loss(const ScoreMatrix& s, const TargetMatrix& target) {
  const auto n = static_cast<std::size_t>(s.z.rows());
  if (n != target.size() || s.z.cols() != s.z.rows())
    throw Error(Errc::ShapeMismatch, "model: score and target shapes differ");
  BoolMatrix valid(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      valid.set(i, j, s.valid(i, j));
      if (target(i, j) && !s.valid(i, j))
        throw Error(Errc::ShapeMismatch, "model: target cell outside the scoring mask");
    }
  Mat<double> z = s.z.unaryExpr([](double v) { return std::isfinite(v) ? v : 0.0; });
  return circle_loss<double>(z, valid, target);
}

// Forward + backward for one query. Adds parameter gradients into `grad`
// (which must share `m`'s shapes) and returns the loss.
template <class T>
T loss_and_grad(const Model<T>& m, const Query& q, const TargetMatrix& target, Model<T>& grad) {
  detail::ForwardCache<T> c;
  const Mat<T> hidden = encode(m, q, &c);
  score_logits(m, hidden, q, &c);

  Mat<T> dz;
  const T loss = circle_loss(c.z, q.scoring_mask, target, &dz);

  // Scoring head.
  Mat<T> dqr = dz * c.kr;
  Mat<T> dkr = dz.transpose() * c.qr;
  Mat<T> dqs = m.dims.rotary ? detail::rope(dqr, q.position_ids, m.dims.rope_base, -1) : dqr;
  Mat<T> dks = m.dims.rotary ? detail::rope(dkr, q.position_ids, m.dims.rope_base, -1) : dkr;
  grad.head_wq.noalias() += hidden.transpose() * dqs;
  grad.head_bq.row(0) += dqs.colwise().sum();
  grad.head_wk.noalias() += hidden.transpose() * dks;
  grad.head_bk.row(0) += dks.colwise().sum();
  Mat<T> dx = dqs * m.head_wq.transpose() + dks * m.head_wk.transpose();

  if (m.dims.final_norm) dx = detail::layer_norm_backward(dx, m.final_g, c.final_ln, grad.final_g, grad.final_b);

  const auto n = static_cast<Eigen::Index>(q.size());
  const auto H = static_cast<Eigen::Index>(m.dims.hidden);
  const auto heads = static_cast<Eigen::Index>(m.dims.heads);
  const auto dh = H / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  for (std::size_t li = m.layers.size(); li-- > 0;) {
    const auto& L = m.layers[li];
    auto& G = grad.layers[li];
    const auto& lc = c.layers[li];

    // Feed-forward block: x' = y + gelu(LN2(y) W1 + b1) W2 + b2.
    grad.layers[li].w2.noalias() += lc.g.transpose() * dx;
    G.b2.row(0) += dx.colwise().sum();
    Mat<T> du = (dx * L.w2.transpose()).array() * lc.u.unaryExpr([](T u) { return detail::gelu_grad(u); }).array();
    G.w1.noalias() += lc.b.transpose() * du;
    G.b1.row(0) += du.colwise().sum();
    Mat<T> db = du * L.w1.transpose();
    Mat<T> dy = dx + detail::layer_norm_backward(db, L.ln2_g, lc.ln2, G.ln2_g, G.ln2_b);

    // Attention block: y = x + attn(LN1(x)) Wo + bo.
    G.wo.noalias() += lc.o.transpose() * dy;
    G.bo.row(0) += dy.colwise().sum();
    Mat<T> dout = dy * L.wo.transpose();
    Mat<T> dq(n, H), dk(n, H), dv(n, H);
    for (Eigen::Index h = 0; h < heads; ++h) {
      const Mat<T>& p = lc.probs[static_cast<std::size_t>(h)];
      Mat<T> dout_h = dout.middleCols(h * dh, dh);
      Mat<T> dp = dout_h * lc.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh) = p.transpose() * dout_h;
      ColVec<T> rowdot = (dp.array() * p.array()).rowwise().sum();
      Mat<T> ds = p.array() * (dp.colwise() - rowdot).array();
      dq.middleCols(h * dh, dh) = ds * lc.k.middleCols(h * dh, dh) * scale;
      dk.middleCols(h * dh, dh) = ds.transpose() * lc.q.middleCols(h * dh, dh) * scale;
    }
    G.wq.noalias() += lc.a.transpose() * dq;
    G.bq.row(0) += dq.colwise().sum();
    G.wk.noalias() += lc.a.transpose() * dk;
    G.bk.row(0) += dk.colwise().sum();
    G.wv.noalias() += lc.a.transpose() * dv;
    G.bv.row(0) += dv.colwise().sum();
    Mat<T> da = dq * L.wq.transpose() + dk * L.wk.transpose() + dv * L.wv.transpose();
    dx = dy + detail::layer_norm_backward(da, L.ln1_g, lc.ln1, G.ln1_g, G.ln1_b);
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    grad.tok_emb.row(q.token_ids[k]) += dx.row(i);
    grad.pos_emb.row(q.position_ids[k]) += dx.row(i);
    grad.type_emb.row(q.token_type_ids[k]) += dx.row(i);
  }
  return loss;
}

template <class T>
T loss_only(const Model<T>& m, const Query& q, const TargetMatrix& target) {
  detail::ForwardCache<T> c;
  const Mat<T> hidden = encode(m, q, &c);
  score_logits(m, hidden, q, &c);
  return circle_loss(c.z, q.scoring_mask, target);
}

}  // namespace schemex
