#pragma once

#include <torch/torch.h>

namespace cain {

/// Pre-activation residual block: [norm -> ReLU -> 3x3 conv] x 2 plus a shortcut.
/// The shortcut is a learned 1x1 (strided) conv whenever channels or resolution change.
struct ResBlockImpl : torch::nn::Module {
  ResBlockImpl(int in_channels, int out_channels, int stride = 1);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::InstanceNorm2d norm1{nullptr}, norm2{nullptr};
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::Conv2d skip{nullptr};
};
TORCH_MODULE(ResBlock);

/// Conv2d whose weight is divided by a power-iteration estimate of its top singular value.
/// Training-mode forwards advance the power iteration by one step; eval mode reuses u and v.
struct SpectralNormConv2dImpl : torch::nn::Module {
  SpectralNormConv2dImpl(int in_channels, int out_channels, int kernel, int padding,
                         int warmup_iterations = 20);
  torch::Tensor forward(const torch::Tensor& x);

  /// W / sigma with the current u, v (no iteration).
  torch::Tensor normalized_weight() const;
  void power_iteration(int steps);

  torch::Tensor weight_orig, bias, u, v;
  int padding = 0;
};
TORCH_MODULE(SpectralNormConv2d);

/// Spatially-adaptive denormalization: parameter-free instance normalization followed by
/// out = normalized * (1 + gamma(e)) + beta(e).
struct SpadeImpl : torch::nn::Module {
  static constexpr double kEps = 1e-5;

  SpadeImpl(int channels, int embed_channels, int hidden_channels);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& e_resized);

  /// gamma and beta computed from the embedding.
  std::pair<torch::Tensor, torch::Tensor> modulation(const torch::Tensor& e_resized);
  /// Zeroes the gamma/beta convolutions so the block reduces to plain normalization.
  void zero_modulation();

  torch::nn::InstanceNorm2d norm{nullptr};
  torch::nn::Conv2d shared{nullptr}, gamma{nullptr}, beta{nullptr};
};
TORCH_MODULE(Spade);

/// SPADE residual block with spectrally-normalized convolutions, constant channel count.
struct SpadeResBlockImpl : torch::nn::Module {
  SpadeResBlockImpl(int channels, int embed_channels);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& e_resized);

  Spade spade1{nullptr}, spade2{nullptr};
  SpectralNormConv2d conv1{nullptr}, conv2{nullptr};
};
TORCH_MODULE(SpadeResBlock);

/// Throws ShapeError unless e_resized's spatial size equals the activations'.
torch::Tensor spade_modulate(const torch::Tensor& activations, const torch::Tensor& e_resized,
                             Spade& block);

/// Nearest-neighbour resampling over the last two dims: out[i][j] = in[i*h/H][j*w/W].
torch::Tensor resize_nearest(const torch::Tensor& x, int64_t height, int64_t width);

}  // namespace cain
