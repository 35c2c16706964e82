#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace cain {

/// Frozen feature extractor used by the perceptual loss and by FID.
class FeatureBackbone {
 public:
  virtual ~FeatureBackbone() = default;
  /// Activations at each tap for a [B,3,H,W] batch. Gradients flow to the input only.
  virtual std::vector<torch::Tensor> taps(const torch::Tensor& images) const = 0;
  virtual std::vector<double> tap_weights() const = 0;
  virtual std::string id() const = 0;
  virtual void to(torch::Dtype dtype) = 0;
};

/// Four conv blocks with fixed random weights drawn from `seed`.
class RandomConvBackbone : public FeatureBackbone {
 public:
  static constexpr int kFeatureDim = 128;

  explicit RandomConvBackbone(std::uint64_t seed);

  std::vector<torch::Tensor> taps(const torch::Tensor& images) const override;
  std::vector<double> tap_weights() const override { return {0.125, 0.25, 0.5, 1.0}; }
  std::string id() const override;
  void to(torch::Dtype dtype) override;

  /// Global average of the last tap: [B, kFeatureDim].
  torch::Tensor pooled_features(const torch::Tensor& images) const;

 private:
  std::uint64_t seed_;
  std::vector<torch::Tensor> weights_;
  std::vector<torch::Tensor> biases_;
};

/// The image itself as a single tap.
class IdentityBackbone : public FeatureBackbone {
 public:
  std::vector<torch::Tensor> taps(const torch::Tensor& images) const override { return {images}; }
  std::vector<double> tap_weights() const override { return {1.0}; }
  std::string id() const override { return "identity"; }
  void to(torch::Dtype) override {}
};

}  // namespace cain
