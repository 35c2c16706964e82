#include "cain/generator.hpp"

#include "cain/errors.hpp"

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace cain {

GeneratorImpl::GeneratorImpl(const GeneratorOptions& opts) : options(opts) {
  std::vector<int> widths;
  for (int i = 0; i < opts.down; ++i)
    widths.push_back(std::min(opts.base_channels << i, opts.max_channels));

  down = register_module("down", nn::ModuleList());
  down_norm = register_module("down_norm", nn::ModuleList());
  int in = 3;
  for (int w : widths) {
    down->push_back(ResBlock(in, w, 2));
    down_norm->push_back(nn::InstanceNorm2d(nn::InstanceNorm2dOptions(w).affine(true)));
    in = w;
  }

  same = register_module("same", nn::ModuleList());
  for (int i = 0; i < opts.same; ++i) same->push_back(ResBlock(in, in));

  up_conv = register_module("up_conv", nn::ModuleList());
  up_norm = register_module("up_norm", nn::ModuleList());
  up_spade = register_module("up_spade", nn::ModuleList());
  for (int i = 0; i < opts.down; ++i) {
    const int out = i + 2 <= opts.down ? widths[opts.down - 2 - i] : widths.front();
    up_conv->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1)));
    up_norm->push_back(nn::InstanceNorm2d(nn::InstanceNorm2dOptions(out).affine(true)));
    up_spade->push_back(SpadeResBlock(out, opts.embed_channels));
    in = out;
  }
  to_rgb = register_module("to_rgb", nn::Conv2d(nn::Conv2dOptions(in, 3, 3).padding(1)));
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& target_landmarks, const torch::Tensor& e_x) {
  auto h = target_landmarks;
  for (std::size_t i = 0; i < down->size(); ++i)
    h = down_norm[i]->as<nn::InstanceNorm2dImpl>()->forward(down[i]->as<ResBlockImpl>()->forward(h));
  for (const auto& block : *same) h = block->as<ResBlockImpl>()->forward(h);
  for (std::size_t i = 0; i < up_conv->size(); ++i) {
    h = F::interpolate(h, F::InterpolateFuncOptions()
                              .scale_factor(std::vector<double>{2.0, 2.0})
                              .mode(torch::kNearest));
    h = up_conv[i]->as<nn::Conv2dImpl>()->forward(h);
    h = torch::relu(up_norm[i]->as<nn::InstanceNorm2dImpl>()->forward(h));
    const auto e = resize_nearest(e_x, h.size(2), h.size(3));
    h = up_spade[i]->as<SpadeResBlockImpl>()->forward(h, e);
  }
  return torch::tanh(to_rgb(F::leaky_relu(h, F::LeakyReLUFuncOptions().negative_slope(0.2))));
}

std::vector<SpectralNormConv2d> GeneratorImpl::spectral_convs() const {
  std::vector<SpectralNormConv2d> out;
  for (const auto& m : *up_spade) {
    const auto* block = m->as<SpadeResBlockImpl>();
    out.push_back(block->conv1);
    out.push_back(block->conv2);
  }
  return out;
}

torch::Tensor generate(const torch::Tensor& target_landmark, const SpatialEmbedding& e_x,
                       Generator& generator) {
  const auto& opts = generator->options;
  const auto& e = e_x.values;
  if (target_landmark.dim() != 3 || target_landmark.size(0) != 3)
    throw ShapeError("generate: target landmarks must be 3xHxW, got " + shape_string(target_landmark));
  const int64_t scale = int64_t{1} << opts.down;
  if (target_landmark.size(1) % scale != 0 || target_landmark.size(2) % scale != 0)
    throw ShapeError("generate: target landmarks " + shape_string(target_landmark) +
                     " are not divisible by 2^" + std::to_string(opts.down));
  if (e.dim() != 3 || e.size(0) != opts.embed_channels || e.size(1) * 4 != target_landmark.size(1) ||
      e.size(2) * 4 != target_landmark.size(2))
    throw ShapeError("generate: embedding " + shape_string(e) + " does not match landmarks " +
                     shape_string(target_landmark) + " (expected " +
                     std::to_string(opts.embed_channels) + " x H/4 x W/4)");
  return generator->forward(target_landmark.unsqueeze(0), e.unsqueeze(0)).squeeze(0);
}

SpatialEmbedding resize_embedding(const SpatialEmbedding& e_x, std::pair<int, int> target_hw) {
  if (target_hw.first < 1 || target_hw.second < 1)
    throw UsageError("resize_embedding: target size must be positive");
  return {resize_nearest(e_x.values, target_hw.first, target_hw.second)};
}

}  // namespace cain
