#pragma once

#include <vector>

#include <torch/torch.h>

namespace cain {

/// Feature taps per scale: four hidden conv activations and the patch score map.
inline constexpr int kDiscriminatorTaps = 5;

struct DiscriminatorOutput {
  std::vector<torch::Tensor> scores;                 // per scale, [B,1,h_s,w_s]
  std::vector<std::vector<torch::Tensor>> features;  // per scale, kDiscriminatorTaps tensors

  int scales() const { return static_cast<int>(scores.size()); }
};

/// 70x70 receptive-field patch classifier: 4 convs (k4) + 1-channel projection.
struct PatchDiscriminatorImpl : torch::nn::Module {
  PatchDiscriminatorImpl(int in_channels, int base_channels);
  /// Activations of every layer; the last entry is the score map.
  std::vector<torch::Tensor> forward(const torch::Tensor& x);

  torch::nn::ModuleList convs{nullptr};
  torch::nn::ModuleList norms{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

/// Runs one PatchDiscriminator per scale; scale s sees the input average-pooled s times by 2.
struct MultiScaleDiscriminatorImpl : torch::nn::Module {
  MultiScaleDiscriminatorImpl(int in_channels, int base_channels, int scales);

  /// Concatenates a and b on channels. a, b: [B,3,H,W].
  DiscriminatorOutput forward(const torch::Tensor& a, const torch::Tensor& b);
  DiscriminatorOutput forward_concat(const torch::Tensor& x);

  torch::nn::ModuleList nets{nullptr};
};
TORCH_MODULE(MultiScaleDiscriminator);

/// Identity discriminator: (candidate, identity frame), both 3xHxW or [B,3,H,W].
DiscriminatorOutput discriminate_identity(const torch::Tensor& a, const torch::Tensor& b,
                                          MultiScaleDiscriminator& d);
/// Pose discriminator: (frame, landmark image).
DiscriminatorOutput discriminate_pose(const torch::Tensor& x, const torch::Tensor& landmarks,
                                      MultiScaleDiscriminator& d);

}  // namespace cain
