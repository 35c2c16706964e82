#pragma once

#include <utility>
#include <vector>

#include <torch/torch.h>

#include "cain/embedder.hpp"
#include "cain/layers.hpp"

namespace cain {

struct GeneratorOptions {
  int base_channels = 64;
  int max_channels = 512;
  int down = 4;  // downsampling residual blocks; the decoder has as many upsampling stages
  int same = 3;
  int embed_channels = 64;
};

/// Encoder-decoder from the target landmark image to an RGB frame. The identity embedding
/// enters only through the SPADE block after each upsampling stage.
struct GeneratorImpl : torch::nn::Module {
  explicit GeneratorImpl(const GeneratorOptions& options);

  /// target_landmarks: [B,3,H,W]; e_x: [B,C_e,h,w]. Returns [B,3,H,W] in [-1, 1].
  torch::Tensor forward(const torch::Tensor& target_landmarks, const torch::Tensor& e_x);

  /// Every spectrally-normalized convolution, in forward order.
  std::vector<SpectralNormConv2d> spectral_convs() const;

  GeneratorOptions options;
  torch::nn::ModuleList down{nullptr}, down_norm{nullptr}, same{nullptr};
  torch::nn::ModuleList up_conv{nullptr}, up_norm{nullptr}, up_spade{nullptr};
  torch::nn::Conv2d to_rgb{nullptr};
};
TORCH_MODULE(Generator);

/// Single-image generation with shape checks. target_landmark: 3xHxW; e_x: C_e x h x w.
torch::Tensor generate(const torch::Tensor& target_landmark, const SpatialEmbedding& e_x,
                       Generator& generator);

/// Nearest-neighbour resampling of an embedding to (height, width).
SpatialEmbedding resize_embedding(const SpatialEmbedding& e_x, std::pair<int, int> target_hw);

}  // namespace cain
