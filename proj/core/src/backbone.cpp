#include "cain/backbone.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>

namespace F = torch::nn::functional;

namespace cain {

RandomConvBackbone::RandomConvBackbone(std::uint64_t seed) : seed_(seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  const int widths[] = {16, 32, 64, kFeatureDim};
  int in = 3;
  for (int w : widths) {
    const double scale = std::sqrt(2.0 / (in * 9));
    weights_.push_back(torch::randn({w, in, 3, 3}, gen) * scale);
    biases_.push_back(torch::zeros({w}));
    in = w;
  }
}

std::vector<torch::Tensor> RandomConvBackbone::taps(const torch::Tensor& images) const {
  std::vector<torch::Tensor> out;
  auto h = images;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (i > 0) h = F::avg_pool2d(h, F::AvgPool2dFuncOptions(2).stride(2));
    h = torch::relu(F::conv2d(h, weights_[i], F::Conv2dFuncOptions().bias(biases_[i]).padding(1)));
    out.push_back(h);
  }
  return out;
}

std::string RandomConvBackbone::id() const { return "random_conv4_seed" + std::to_string(seed_); }

void RandomConvBackbone::to(torch::Dtype dtype) {
  for (auto& w : weights_) w = w.to(dtype);
  for (auto& b : biases_) b = b.to(dtype);
}

torch::Tensor RandomConvBackbone::pooled_features(const torch::Tensor& images) const {
  return taps(images).back().mean({2, 3});
}

}  // namespace cain
