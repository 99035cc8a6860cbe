// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <vector>

#include "limbpose/model/config.hpp"
#include "limbpose/model/parameters.hpp"

namespace limbpose {

/// Network-facing description of K requested keypoints. Vectorized and
/// baseline embedders read `keypoint` (K x n) and `thickness` (K x 3);
/// norm-pose embedders read `coords` (K x 2).
template <typename T>
struct TokenInputs {
  Mat<T> keypoint;
  Mat<T> thickness;
  Mat<T> coords;

  int count() const { return static_cast<int>(std::max(keypoint.rows(), coords.rows())); }
};

template <typename T>
struct LayerCache {
  Mat<T> xhat1, h1, qkv, att;
  RowVec<T> rstd1;
  std::vector<Mat<T>> probs;  // per head, N x N
  Mat<T> xhat2, h2, f1, g;
  RowVec<T> rstd2;
};

template <typename T>
struct ForwardCache {
  Mat<T> patches;
  std::vector<Mat<T>> mlp_pre;   // norm-pose MLP pre-activations
  std::vector<Mat<T>> mlp_post;  // inputs of each MLP layer
  std::vector<LayerCache<T>> layers;
  Mat<T> head_xhat, head_z, head_u, head_g;
  RowVec<T> head_rstd;
  int keypoints = 0;
};

/// Pre-norm transformer over [visual tokens | keypoint tokens] with a
/// per-keypoint heatmap head. Parameters live in one flat array described by
/// layout(); gradients use the same layout.
template <typename T>
class Transformer {
 public:
  explicit Transformer(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  const ParameterLayout& layout() const { return layout_; }
  ParamVector<T> initial_parameters() const { return layout_.template initialize<T>(config_.seed); }

  /// P x m sine/cosine table: the first m/2 channels encode the patch row,
  /// the rest the column, alternating sin and cos per frequency.
  const Mat<T>& positional_encoding() const { return pe_; }

  /// `image` is image_height x image_width with values in [0, 1].
  Mat<T> extract_patches(const Mat<T>& image) const;
  Mat<T> embed_patches(const T* params, const Mat<T>& image) const;
  /// (K * tokens_per_keypoint) x m; baseline tokens are all keypoint-vector
  /// tokens followed by all thickness tokens.
  Mat<T> embed_keypoints(const T* params, const TokenInputs<T>& inputs, ForwardCache<T>* cache = nullptr) const;

  /// K x cells raw heatmaps (row-major cells).
  Mat<T> forward(const T* params, const Mat<T>& image, const TokenInputs<T>& inputs,
                 ForwardCache<T>* cache = nullptr) const;

  /// Adds d(loss)/d(params) to `grad` given d(loss)/d(forward output).
  void backward(const T* params, const Mat<T>& image, const TokenInputs<T>& inputs, const ForwardCache<T>& cache,
                const Mat<T>& d_out, T* grad) const;

 private:
  struct LayerSlots {
    std::size_t ln1_g, ln1_b, qkv_w, qkv_b, proj_w, proj_b, ln2_g, ln2_b, ffn1_w, ffn1_b, ffn2_w, ffn2_b;
  };

  void block_forward(const T* params, const LayerSlots& s, Mat<T>& x, LayerCache<T>* cache) const;
  Mat<T> block_backward(const T* params, const LayerSlots& s, const LayerCache<T>& cache, const Mat<T>& dx,
                        T* grad) const;
  void embed_backward(const TokenInputs<T>& inputs, const ForwardCache<T>& cache, const T* params,
                      const Mat<T>& d_tokens, T* grad) const;

  const ParamEntry& entry(std::size_t i) const { return layout_[i]; }

  ModelConfig config_;
  ParameterLayout layout_;
  Mat<T> pe_;
  std::size_t patch_w_, patch_b_;
  std::vector<std::size_t> embed_;  // embedder blocks, weight/bias pairs
  std::vector<LayerSlots> layers_;
  std::size_t head_ln_g_, head_ln_b_, head_fc1_w_, head_fc1_b_, head_fc2_w_, head_fc2_b_;
};

extern template class Transformer<float>;
extern template class Transformer<double>;

}  // namespace limbpose
