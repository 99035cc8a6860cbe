// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/model/transformer.hpp"

#include <cmath>
#include <string>

#include "limbpose/errors.hpp"

namespace limbpose {

namespace {

constexpr double kLayerNormEps = 1e-5;

template <typename T>
using ConstRow = Eigen::Map<const RowVec<T>>;

template <typename T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(M_SQRT1_2)));
}

template <typename T>
T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * T(M_SQRT1_2)));
  const T pdf = std::exp(T(-0.5) * x * x) * T(0.3989422804014327);
  return cdf + x * pdf;
}

template <typename T>
T softplus(T x) {
  return x > T(20) ? x : std::log1p(std::exp(x));
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
void layer_norm(const Mat<T>& x, const ConstRow<T>& gain, const ConstRow<T>& bias, Mat<T>& xhat, RowVec<T>& rstd,
                Mat<T>& y) {
  const Eigen::Index n = x.rows();
  const T inv_m = T(1) / static_cast<T>(x.cols());
  xhat.resize(n, x.cols());
  rstd.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mu = x.row(i).sum() * inv_m;
    xhat.row(i) = x.row(i).array() - mu;
    const T var = xhat.row(i).squaredNorm() * inv_m;
    rstd(i) = T(1) / std::sqrt(var + T(kLayerNormEps));
    xhat.row(i) *= rstd(i);
  }
  y = (xhat.array().rowwise() * gain.array()).rowwise() + bias.array();
}

template <typename T>
Mat<T> layer_norm_backward(const Mat<T>& dy, const Mat<T>& xhat, const RowVec<T>& rstd, const ConstRow<T>& gain,
                           T* d_gain, T* d_bias) {
  const Eigen::Index m = dy.cols();
  Eigen::Map<RowVec<T>>(d_gain, m) += (dy.array() * xhat.array()).colwise().sum().matrix();
  Eigen::Map<RowVec<T>>(d_bias, m) += dy.colwise().sum();
  Mat<T> dxhat = dy.array().rowwise() * gain.array();
  const T inv_m = T(1) / static_cast<T>(m);
  Mat<T> dx(dy.rows(), m);
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const T mean_d = dxhat.row(i).sum() * inv_m;
    const T mean_dx = dxhat.row(i).dot(xhat.row(i)) * inv_m;
    dx.row(i) = rstd(i) * (dxhat.row(i).array() - mean_d - xhat.row(i).array() * mean_dx).matrix();
  }
  return dx;
}

// y = x W + b
template <typename T>
void affine(const Mat<T>& x, const Eigen::Map<const Mat<T>>& w, const ConstRow<T>& b, Mat<T>& y) {
  y.noalias() = x * w;
  y.rowwise() += b;
}

// Accumulates dW += x^T dy, db += colsum(dy).
template <typename T>
void affine_grad(const Mat<T>& x, const Mat<T>& dy, T* grad, const ParamEntry& w, const ParamEntry& b) {
  view(grad, w).noalias() += x.transpose() * dy;
  row_view(grad, b) += dy.colwise().sum();
}

}  // namespace

template <typename T>
Transformer<T>::Transformer(const ModelConfig& config) : config_(config) {
  config_.validate();
  const int m = config_.embed_dim;
  const int n = config_.num_keypoints;
  patch_w_ = layout_.add("patch.w", config_.patch_dim(), m, ParamInit::kFanIn);
  patch_b_ = layout_.add("patch.b", 1, m, ParamInit::kZero);
  auto add_affine = [&](const std::string& name, int in, int out) {
    embed_.push_back(layout_.add(name + ".w", in, out, ParamInit::kFanIn));
    embed_.push_back(layout_.add(name + ".b", 1, out, ParamInit::kZero));
  };
  switch (config_.embedder) {
    case EmbedderKind::kVectorized:
      add_affine("embed.kv", n, m / 2);
      add_affine("embed.tv", 3, m / 2);
      break;
    case EmbedderKind::kThicknessBaseline:
      add_affine("embed.kv", n, m);
      add_affine("embed.tv", 3, m);
      break;
    case EmbedderKind::kNormPoseLinear:
      add_affine("embed.np", 2, m);
      break;
    case EmbedderKind::kNormPoseMlp:
      add_affine("embed.np0", 2, m);
      for (int i = 1; i < 4; ++i) add_affine("embed.np" + std::to_string(i), m, m);
      break;
  }
  const int f = config_.ffn_dim();
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerSlots s{};
    s.ln1_g = layout_.add(p + "ln1.g", 1, m, ParamInit::kOne);
    s.ln1_b = layout_.add(p + "ln1.b", 1, m, ParamInit::kZero);
    s.qkv_w = layout_.add(p + "qkv.w", m, 3 * m, ParamInit::kFanIn);
    s.qkv_b = layout_.add(p + "qkv.b", 1, 3 * m, ParamInit::kZero);
    s.proj_w = layout_.add(p + "proj.w", m, m, ParamInit::kFanIn);
    s.proj_b = layout_.add(p + "proj.b", 1, m, ParamInit::kZero);
    s.ln2_g = layout_.add(p + "ln2.g", 1, m, ParamInit::kOne);
    s.ln2_b = layout_.add(p + "ln2.b", 1, m, ParamInit::kZero);
    s.ffn1_w = layout_.add(p + "ffn1.w", m, f, ParamInit::kFanIn);
    s.ffn1_b = layout_.add(p + "ffn1.b", 1, f, ParamInit::kZero);
    s.ffn2_w = layout_.add(p + "ffn2.w", f, m, ParamInit::kFanIn);
    s.ffn2_b = layout_.add(p + "ffn2.b", 1, m, ParamInit::kZero);
    layers_.push_back(s);
  }
  head_ln_g_ = layout_.add("head.ln.g", 1, m, ParamInit::kOne);
  head_ln_b_ = layout_.add("head.ln.b", 1, m, ParamInit::kZero);
  head_fc1_w_ = layout_.add("head.fc1.w", m, config_.head_hidden, ParamInit::kFanIn);
  head_fc1_b_ = layout_.add("head.fc1.b", 1, config_.head_hidden, ParamInit::kZero);
  head_fc2_w_ = layout_.add("head.fc2.w", config_.head_hidden, config_.cells(), ParamInit::kFanIn);
  head_fc2_b_ = layout_.add("head.fc2.b", 1, config_.cells(), ParamInit::kZero);

  const int gh = config_.grid_height();
  const int gw = config_.grid_width();
  const int q = m / 2;
  pe_.resize(gh * gw, m);
  for (int r = 0; r < gh; ++r) {
    for (int c = 0; c < gw; ++c) {
      for (int ch = 0; ch < q; ++ch) {
        const double omega = std::pow(10000.0, -2.0 * (ch / 2) / q);
        const bool use_sin = ch % 2 == 0;
        pe_(r * gw + c, ch) = static_cast<T>(use_sin ? std::sin(r * omega) : std::cos(r * omega));
        pe_(r * gw + c, q + ch) = static_cast<T>(use_sin ? std::sin(c * omega) : std::cos(c * omega));
      }
    }
  }
}

template <typename T>
Mat<T> Transformer<T>::extract_patches(const Mat<T>& image) const {
  if (image.rows() != config_.image_height || image.cols() != config_.image_width) {
    throw DomainError("image size does not match the model input size");
  }
  const int ph = config_.patch_height;
  const int pw = config_.patch_width;
  const int gw = config_.grid_width();
  Mat<T> patches(config_.patch_count(), config_.patch_dim());
  for (int gr = 0; gr < config_.grid_height(); ++gr) {
    for (int gc = 0; gc < gw; ++gc) {
      for (int i = 0; i < ph; ++i) {
        for (int j = 0; j < pw; ++j) patches(gr * gw + gc, i * pw + j) = image(gr * ph + i, gc * pw + j);
      }
    }
  }
  return patches;
}

template <typename T>
Mat<T> Transformer<T>::embed_patches(const T* params, const Mat<T>& image) const {
  Mat<T> tokens;
  affine<T>(extract_patches(image), view(params, entry(patch_w_)), row_view(params, entry(patch_b_)), tokens);
  return tokens;
}

template <typename T>
Mat<T> Transformer<T>::embed_keypoints(const T* params, const TokenInputs<T>& in, ForwardCache<T>* cache) const {
  const int k = in.count();
  const int m = config_.embed_dim;
  auto w = [&](int i) { return view(params, entry(embed_[i])); };
  auto b = [&](int i) { return row_view(params, entry(embed_[i])); };
  Mat<T> tokens(k * config_.tokens_per_keypoint(), m);
  Mat<T> tmp;
  switch (config_.embedder) {
    case EmbedderKind::kVectorized:
    case EmbedderKind::kThicknessBaseline: {
      if (in.keypoint.rows() != k || in.keypoint.cols() != config_.num_keypoints || in.thickness.rows() != k ||
          in.thickness.cols() != 3) {
        throw DomainError("keypoint/thickness vectors do not match the model");
      }
      Mat<T> kv_tok;
      Mat<T> tv_tok;
      affine<T>(in.keypoint, w(0), b(1), kv_tok);
      affine<T>(in.thickness, w(2), b(3), tv_tok);
      // side by side for vectorized, stacked for the baseline
      tokens << kv_tok, tv_tok;
      break;
    }
    case EmbedderKind::kNormPoseLinear:
      if (in.coords.rows() != k || in.coords.cols() != 2) throw DomainError("norm-pose coords must be K x 2");
      affine<T>(in.coords, w(0), b(1), tokens);
      break;
    case EmbedderKind::kNormPoseMlp: {
      if (in.coords.rows() != k || in.coords.cols() != 2) throw DomainError("norm-pose coords must be K x 2");
      Mat<T> h = in.coords;
      if (cache) {
        cache->mlp_pre.clear();
        cache->mlp_post.clear();
      }
      for (int layer = 0; layer < 4; ++layer) {
        if (cache) cache->mlp_post.push_back(h);
        affine<T>(h, w(2 * layer), b(2 * layer + 1), tmp);
        if (layer == 3) {
          tokens = tmp;
          break;
        }
        if (cache) cache->mlp_pre.push_back(tmp);
        h = tmp.unaryExpr([](T x) { return softplus(x); });
      }
      break;
    }
  }
  return tokens;
}

template <typename T>
void Transformer<T>::block_forward(const T* params, const LayerSlots& s, Mat<T>& x, LayerCache<T>* cache) const {
  const int m = config_.embed_dim;
  const int heads = config_.heads;
  const int dh = m / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const Eigen::Index n = x.rows();

  LayerCache<T> local;
  LayerCache<T>& c = cache ? *cache : local;
  layer_norm<T>(x, row_view(params, entry(s.ln1_g)), row_view(params, entry(s.ln1_b)), c.xhat1, c.rstd1, c.h1);
  affine<T>(c.h1, view(params, entry(s.qkv_w)), row_view(params, entry(s.qkv_b)), c.qkv);
  c.att.resize(n, m);
  c.probs.resize(heads);
  for (int h = 0; h < heads; ++h) {
    const auto q = c.qkv.middleCols(h * dh, dh);
    const auto k = c.qkv.middleCols(m + h * dh, dh);
    const auto v = c.qkv.middleCols(2 * m + h * dh, dh);
    Mat<T>& a = c.probs[h];
    a.noalias() = q * k.transpose();
    a *= scale;
    for (Eigen::Index i = 0; i < n; ++i) {
      const T mx = a.row(i).maxCoeff();
      a.row(i) = (a.row(i).array() - mx).exp();
      a.row(i) /= a.row(i).sum();
    }
    c.att.middleCols(h * dh, dh).noalias() = a * v;
  }
  x.noalias() += c.att * view(params, entry(s.proj_w));
  x.rowwise() += row_view(params, entry(s.proj_b));

  layer_norm<T>(x, row_view(params, entry(s.ln2_g)), row_view(params, entry(s.ln2_b)), c.xhat2, c.rstd2, c.h2);
  affine<T>(c.h2, view(params, entry(s.ffn1_w)), row_view(params, entry(s.ffn1_b)), c.f1);
  c.g = c.f1.unaryExpr([](T v) { return gelu(v); });
  x.noalias() += c.g * view(params, entry(s.ffn2_w));
  x.rowwise() += row_view(params, entry(s.ffn2_b));
}

template <typename T>
Mat<T> Transformer<T>::forward(const T* params, const Mat<T>& image, const TokenInputs<T>& in,
                               ForwardCache<T>* cache) const {
  const int k = in.count();
  if (k == 0) return Mat<T>(0, config_.cells());
  const int p = config_.patch_count();
  const int m = config_.embed_dim;
  Mat<T> patches = extract_patches(image);
  const Mat<T> tokens = embed_keypoints(params, in, cache);
  Mat<T> x(p + tokens.rows(), m);
  Mat<T> visual;
  affine<T>(patches, view(params, entry(patch_w_)), row_view(params, entry(patch_b_)), visual);
  x.topRows(p) = visual + pe_;
  x.bottomRows(tokens.rows()) = tokens;
  if (cache) {
    cache->patches = std::move(patches);
    cache->layers.resize(layers_.size());
    cache->keypoints = k;
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (l > 0) x.topRows(p) += pe_;
    block_forward(params, layers_[l], x, cache ? &cache->layers[l] : nullptr);
  }

  Mat<T> readout = x.middleRows(p, k);
  Mat<T> xhat, z, u, out;
  RowVec<T> rstd;
  layer_norm<T>(readout, row_view(params, entry(head_ln_g_)), row_view(params, entry(head_ln_b_)), xhat, rstd, z);
  affine<T>(z, view(params, entry(head_fc1_w_)), row_view(params, entry(head_fc1_b_)), u);
  Mat<T> g = u.unaryExpr([](T v) { return gelu(v); });
  affine<T>(g, view(params, entry(head_fc2_w_)), row_view(params, entry(head_fc2_b_)), out);
  if (cache) {
    cache->head_xhat = std::move(xhat);
    cache->head_rstd = std::move(rstd);
    cache->head_z = std::move(z);
    cache->head_u = std::move(u);
    cache->head_g = std::move(g);
  }
  return out;
}

template <typename T>
Mat<T> Transformer<T>::block_backward(const T* params, const LayerSlots& s, const LayerCache<T>& c, const Mat<T>& dx,
                                      T* grad) const {
  const int m = config_.embed_dim;
  const int heads = config_.heads;
  const int dh = m / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const Eigen::Index n = dx.rows();

  affine_grad<T>(c.g, dx, grad, entry(s.ffn2_w), entry(s.ffn2_b));
  Mat<T> df1 = dx * view(params, entry(s.ffn2_w)).transpose();
  df1.array() *= c.f1.unaryExpr([](T v) { return gelu_grad(v); }).array();
  affine_grad<T>(c.h2, df1, grad, entry(s.ffn1_w), entry(s.ffn1_b));
  const Mat<T> dh2 = df1 * view(params, entry(s.ffn1_w)).transpose();
  Mat<T> dmid = dx + layer_norm_backward<T>(dh2, c.xhat2, c.rstd2, row_view(params, entry(s.ln2_g)),
                                            grad + entry(s.ln2_g).offset, grad + entry(s.ln2_b).offset);

  affine_grad<T>(c.att, dmid, grad, entry(s.proj_w), entry(s.proj_b));
  const Mat<T> datt = dmid * view(params, entry(s.proj_w)).transpose();
  Mat<T> dqkv(n, 3 * m);
  Mat<T> da;
  for (int h = 0; h < heads; ++h) {
    const auto q = c.qkv.middleCols(h * dh, dh);
    const auto k = c.qkv.middleCols(m + h * dh, dh);
    const auto v = c.qkv.middleCols(2 * m + h * dh, dh);
    const Mat<T>& a = c.probs[h];
    const auto dout = datt.middleCols(h * dh, dh);
    da.noalias() = dout * v.transpose();
    dqkv.middleCols(2 * m + h * dh, dh).noalias() = a.transpose() * dout;
    for (Eigen::Index i = 0; i < n; ++i) {
      const T dot = da.row(i).dot(a.row(i));
      da.row(i) = a.row(i).array() * (da.row(i).array() - dot);
    }
    da *= scale;
    dqkv.middleCols(h * dh, dh).noalias() = da * k;
    dqkv.middleCols(m + h * dh, dh).noalias() = da.transpose() * q;
  }
  affine_grad<T>(c.h1, dqkv, grad, entry(s.qkv_w), entry(s.qkv_b));
  const Mat<T> dh1 = dqkv * view(params, entry(s.qkv_w)).transpose();
  return dmid + layer_norm_backward<T>(dh1, c.xhat1, c.rstd1, row_view(params, entry(s.ln1_g)),
                                       grad + entry(s.ln1_g).offset, grad + entry(s.ln1_b).offset);
}

template <typename T>
void Transformer<T>::embed_backward(const TokenInputs<T>& in, const ForwardCache<T>& cache, const T* params,
                                    const Mat<T>& d_tokens, T* grad) const {
  const int k = in.count();
  const int m = config_.embed_dim;
  auto e = [&](int i) -> const ParamEntry& { return entry(embed_[i]); };
  switch (config_.embedder) {
    case EmbedderKind::kVectorized:
      affine_grad<T>(in.keypoint, d_tokens.leftCols(m / 2), grad, e(0), e(1));
      affine_grad<T>(in.thickness, d_tokens.rightCols(m / 2), grad, e(2), e(3));
      break;
    case EmbedderKind::kThicknessBaseline:
      affine_grad<T>(in.keypoint, d_tokens.topRows(k), grad, e(0), e(1));
      affine_grad<T>(in.thickness, d_tokens.bottomRows(k), grad, e(2), e(3));
      break;
    case EmbedderKind::kNormPoseLinear:
      affine_grad<T>(in.coords, d_tokens, grad, e(0), e(1));
      break;
    case EmbedderKind::kNormPoseMlp: {
      Mat<T> d = d_tokens;
      for (int layer = 3; layer >= 0; --layer) {
        affine_grad<T>(cache.mlp_post[layer], d, grad, e(2 * layer), e(2 * layer + 1));
        if (layer == 0) break;
        Mat<T> dh = d * view(params, e(2 * layer)).transpose();
        dh.array() *= cache.mlp_pre[layer - 1].unaryExpr([](T x) { return sigmoid(x); }).array();
        d = std::move(dh);
      }
      break;
    }
  }
}

template <typename T>
void Transformer<T>::backward(const T* params, const Mat<T>& image, const TokenInputs<T>& in,
                              const ForwardCache<T>& cache, const Mat<T>& d_out, T* grad) const {
  (void)image;
  const int k = cache.keypoints;
  if (k == 0) return;
  const int p = config_.patch_count();
  affine_grad<T>(cache.head_g, d_out, grad, entry(head_fc2_w_), entry(head_fc2_b_));
  Mat<T> du = d_out * view(params, entry(head_fc2_w_)).transpose();
  du.array() *= cache.head_u.unaryExpr([](T v) { return gelu_grad(v); }).array();
  affine_grad<T>(cache.head_z, du, grad, entry(head_fc1_w_), entry(head_fc1_b_));
  const Mat<T> dz = du * view(params, entry(head_fc1_w_)).transpose();
  const Mat<T> dread = layer_norm_backward<T>(dz, cache.head_xhat, cache.head_rstd,
                                              row_view(params, entry(head_ln_g_)), grad + entry(head_ln_g_).offset,
                                              grad + entry(head_ln_b_).offset);

  const Eigen::Index total = p + static_cast<Eigen::Index>(k) * config_.tokens_per_keypoint();
  Mat<T> dx = Mat<T>::Zero(total, config_.embed_dim);
  dx.middleRows(p, k) = dread;
  for (std::size_t l = layers_.size(); l-- > 0;) dx = block_backward(params, layers_[l], cache.layers[l], dx, grad);

  embed_backward(in, cache, params, dx.bottomRows(total - p), grad);
  affine_grad<T>(cache.patches, dx.topRows(p), grad, entry(patch_w_), entry(patch_b_));
}

template class Transformer<float>;
template class Transformer<double>;

}  // namespace limbpose
