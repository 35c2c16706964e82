#include "cain/discriminator.hpp"

#include "cain/errors.hpp"

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace cain {

namespace {

torch::Tensor batched(const torch::Tensor& t) { return t.dim() == 3 ? t.unsqueeze(0) : t; }

DiscriminatorOutput run_pair(const torch::Tensor& a, const torch::Tensor& b,
                             MultiScaleDiscriminator& d, const char* what) {
  if (a.sizes() != b.sizes() || (a.dim() != 3 && a.dim() != 4) || a.size(-3) != 3)
    throw ShapeError(std::string(what) + ": inputs " + shape_string(a) + " and " +
                     shape_string(b) + " must be matching RGB images");
  return d->forward(batched(a), batched(b));
}

}  // namespace

PatchDiscriminatorImpl::PatchDiscriminatorImpl(int in_channels, int base) {
  convs = register_module("convs", nn::ModuleList());
  norms = register_module("norms", nn::ModuleList());
  const int widths[] = {base, base * 2, base * 4, base * 8};
  const int strides[] = {2, 2, 2, 1};
  int in = in_channels;
  for (int i = 0; i < 4; ++i) {
    convs->push_back(nn::Conv2d(nn::Conv2dOptions(in, widths[i], 4).stride(strides[i]).padding(2)));
    if (i > 0) norms->push_back(nn::InstanceNorm2d(nn::InstanceNorm2dOptions(widths[i])));
    in = widths[i];
  }
  convs->push_back(nn::Conv2d(nn::Conv2dOptions(in, 1, 4).stride(1).padding(2)));
}

std::vector<torch::Tensor> PatchDiscriminatorImpl::forward(const torch::Tensor& x) {
  std::vector<torch::Tensor> taps;
  auto h = x;
  for (std::size_t i = 0; i + 1 < convs->size(); ++i) {
    h = convs[i]->as<nn::Conv2dImpl>()->forward(h);
    if (i > 0) h = norms[i - 1]->as<nn::InstanceNorm2dImpl>()->forward(h);
    h = F::leaky_relu(h, F::LeakyReLUFuncOptions().negative_slope(0.2));
    taps.push_back(h);
  }
  taps.push_back(convs[convs->size() - 1]->as<nn::Conv2dImpl>()->forward(h));
  return taps;
}

MultiScaleDiscriminatorImpl::MultiScaleDiscriminatorImpl(int in_channels, int base, int scales) {
  nets = register_module("nets", nn::ModuleList());
  for (int s = 0; s < scales; ++s) nets->push_back(PatchDiscriminator(in_channels, base));
}

DiscriminatorOutput MultiScaleDiscriminatorImpl::forward_concat(const torch::Tensor& x) {
  DiscriminatorOutput out;
  auto input = x;
  for (std::size_t s = 0; s < nets->size(); ++s) {
    if (s > 0) input = F::avg_pool2d(input, F::AvgPool2dFuncOptions(2).stride(2));
    auto taps = nets[s]->as<PatchDiscriminatorImpl>()->forward(input);
    out.scores.push_back(taps.back());
    out.features.push_back(std::move(taps));
  }
  return out;
}

DiscriminatorOutput MultiScaleDiscriminatorImpl::forward(const torch::Tensor& a, const torch::Tensor& b) {
  return forward_concat(torch::cat({a, b}, 1));
}

DiscriminatorOutput discriminate_identity(const torch::Tensor& a, const torch::Tensor& b,
                                          MultiScaleDiscriminator& d) {
  return run_pair(a, b, d, "discriminate_identity");
}

DiscriminatorOutput discriminate_pose(const torch::Tensor& x, const torch::Tensor& landmarks,
                                      MultiScaleDiscriminator& d) {
  return run_pair(x, landmarks, d, "discriminate_pose");
}

}  // namespace cain
