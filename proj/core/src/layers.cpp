#include "cain/layers.hpp"

#include "cain/errors.hpp"

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace cain {

namespace {

nn::Conv2dOptions conv3x3(int in, int out, int stride = 1) {
  return nn::Conv2dOptions(in, out, 3).stride(stride).padding(1);
}

torch::Tensor l2_normalize(const torch::Tensor& t) { return t / (t.norm() + 1e-12); }

}  // namespace

ResBlockImpl::ResBlockImpl(int in_channels, int out_channels, int stride) {
  norm1 = register_module("norm1", nn::InstanceNorm2d(nn::InstanceNorm2dOptions(in_channels).affine(true)));
  conv1 = register_module("conv1", nn::Conv2d(conv3x3(in_channels, out_channels, stride)));
  norm2 = register_module("norm2", nn::InstanceNorm2d(nn::InstanceNorm2dOptions(out_channels).affine(true)));
  conv2 = register_module("conv2", nn::Conv2d(conv3x3(out_channels, out_channels)));
  if (in_channels != out_channels || stride != 1)
    skip = register_module(
        "skip", nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, 1).stride(stride)));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x) {
  auto h = conv1(torch::relu(norm1(x)));
  h = conv2(torch::relu(norm2(h)));
  return h + (skip ? skip(x) : x);
}

SpectralNormConv2dImpl::SpectralNormConv2dImpl(int in_channels, int out_channels, int kernel,
                                               int padding_, int warmup_iterations)
    : padding(padding_) {
  // Borrow Conv2d's default initialization.
  nn::Conv2d init(nn::Conv2dOptions(in_channels, out_channels, kernel));
  weight_orig = register_parameter("weight_orig", init->weight.detach().clone());
  bias = register_parameter("bias", init->bias.detach().clone());
  const auto cols = static_cast<int64_t>(in_channels) * kernel * kernel;
  u = register_buffer("u", l2_normalize(torch::randn({out_channels})));
  v = register_buffer("v", l2_normalize(torch::randn({cols})));
  power_iteration(warmup_iterations);
}

void SpectralNormConv2dImpl::power_iteration(int steps) {
  torch::NoGradGuard guard;
  const auto w = weight_orig.reshape({weight_orig.size(0), -1});
  for (int i = 0; i < steps; ++i) {
    v.copy_(l2_normalize(torch::mv(w.t(), u)));
    u.copy_(l2_normalize(torch::mv(w, v)));
  }
}

torch::Tensor SpectralNormConv2dImpl::normalized_weight() const {
  const auto w = weight_orig.reshape({weight_orig.size(0), -1});
  const auto sigma = torch::dot(u, torch::mv(w, v));
  return weight_orig / sigma;
}

torch::Tensor SpectralNormConv2dImpl::forward(const torch::Tensor& x) {
  if (is_training()) power_iteration(1);
  return F::conv2d(x, normalized_weight(), F::Conv2dFuncOptions().bias(bias).padding(padding));
}

SpadeImpl::SpadeImpl(int channels, int embed_channels, int hidden_channels) {
  norm = register_module(
      "norm", nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels).affine(false).eps(kEps)));
  shared = register_module("shared", nn::Conv2d(conv3x3(embed_channels, hidden_channels)));
  gamma = register_module("gamma", nn::Conv2d(conv3x3(hidden_channels, channels)));
  beta = register_module("beta", nn::Conv2d(conv3x3(hidden_channels, channels)));
}

std::pair<torch::Tensor, torch::Tensor> SpadeImpl::modulation(const torch::Tensor& e_resized) {
  const auto h = torch::relu(shared(e_resized));
  return {gamma(h), beta(h)};
}

torch::Tensor SpadeImpl::forward(const torch::Tensor& x, const torch::Tensor& e_resized) {
  auto [g, b] = modulation(e_resized);
  return norm(x) * (1 + g) + b;
}

void SpadeImpl::zero_modulation() {
  torch::NoGradGuard guard;
  for (auto* conv : {&gamma, &beta}) {
    (*conv)->weight.zero_();
    (*conv)->bias.zero_();
  }
}

SpadeResBlockImpl::SpadeResBlockImpl(int channels, int embed_channels) {
  const int hidden = std::max(embed_channels, 16);
  spade1 = register_module("spade1", Spade(channels, embed_channels, hidden));
  conv1 = register_module("conv1", SpectralNormConv2d(channels, channels, 3, 1));
  spade2 = register_module("spade2", Spade(channels, embed_channels, hidden));
  conv2 = register_module("conv2", SpectralNormConv2d(channels, channels, 3, 1));
}

torch::Tensor SpadeResBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& e_resized) {
  auto h = conv1(F::leaky_relu(spade1(x, e_resized), F::LeakyReLUFuncOptions().negative_slope(0.2)));
  h = conv2(F::leaky_relu(spade2(h, e_resized), F::LeakyReLUFuncOptions().negative_slope(0.2)));
  return x + h;
}

torch::Tensor spade_modulate(const torch::Tensor& activations, const torch::Tensor& e_resized,
                             Spade& block) {
  if (activations.dim() != 4 || e_resized.dim() != 4 || activations.size(0) != e_resized.size(0) ||
      activations.size(2) != e_resized.size(2) || activations.size(3) != e_resized.size(3))
    throw ShapeError("spade_modulate: activations " + shape_string(activations) +
                     " and embedding " + shape_string(e_resized) + " differ in batch or spatial size");
  return block->forward(activations, e_resized);
}

torch::Tensor resize_nearest(const torch::Tensor& x, int64_t height, int64_t width) {
  if (x.dim() < 2 || height < 1 || width < 1)
    throw UsageError("resize_nearest: invalid target size or input " + shape_string(x));
  const int64_t in_h = x.size(-2), in_w = x.size(-1);
  if (in_h == height && in_w == width) return x;
  auto index = [&](int64_t out, int64_t in) {
    std::vector<int64_t> idx(static_cast<std::size_t>(out));
    for (int64_t i = 0; i < out; ++i) idx[static_cast<std::size_t>(i)] = i * in / out;
    return torch::tensor(idx, torch::TensorOptions().dtype(torch::kLong).device(x.device()));
  };
  return x.index_select(x.dim() - 2, index(height, in_h)).index_select(x.dim() - 1, index(width, in_w));
}

}  // namespace cain
