#pragma once

#include <utility>
#include <vector>

#include <torch/torch.h>

#include "cain/layers.hpp"

namespace cain {

/// C_e x h_e x w_e identity feature map of one source frame (or the fused identity).
struct SpatialEmbedding {
  torch::Tensor values;
};

/// Strictly positive per-element certainty of a SpatialEmbedding.
struct ResponsibilityMap {
  torch::Tensor values;
};

/// Floor added after the softplus of the responsibility head.
inline constexpr double kResponsibilityEpsilon = 1e-4;

/// Shared trunk (2 downsampling + 4 same-resolution residual blocks) followed by two
/// independent residual heads producing e and r from (frame, landmarks, target landmarks).
struct TargetedEmbedderImpl : torch::nn::Module {
  explicit TargetedEmbedderImpl(int embed_channels);

  /// frames, landmarks, target_landmarks: [N,3,H,W]. Returns e, r: [N,C_e,H/4,W/4].
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& frames,
                                                  const torch::Tensor& landmarks,
                                                  const torch::Tensor& target_landmarks);

  int embed_channels;
  ResBlock down1{nullptr}, down2{nullptr};
  torch::nn::ModuleList trunk{nullptr};
  ResBlock e_head{nullptr}, r_head{nullptr};
};
TORCH_MODULE(TargetedEmbedder);

/// Embeds one 3xHxW frame; throws ShapeError listing all three shapes on mismatch.
std::pair<SpatialEmbedding, ResponsibilityMap> embed_single(const torch::Tensor& frame,
                                                            const torch::Tensor& landmark,
                                                            const torch::Tensor& target_landmark,
                                                            TargetedEmbedder& embedder);

/// Responsibility-weighted fusion sum(e_i * r_i) / sum(r_i), elementwise.
SpatialEmbedding combine_embeddings(
    const std::vector<std::pair<SpatialEmbedding, ResponsibilityMap>>& pairs);

/// Plain elementwise mean of the embeddings.
SpatialEmbedding combine_uniform(const std::vector<SpatialEmbedding>& embeddings);

/// Fusion over dimension `dim` of stacked tensors. Terms are summed in sorted order, so the
/// result is bitwise independent of the order of the sources.
torch::Tensor combine_stacked(const torch::Tensor& e, const torch::Tensor& r, int64_t dim);
torch::Tensor combine_uniform_stacked(const torch::Tensor& e, int64_t dim);

}  // namespace cain
