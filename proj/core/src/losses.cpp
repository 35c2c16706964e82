#include "cain/losses.hpp"

#include "cain/errors.hpp"

namespace cain {

torch::Tensor aggregate_score(const DiscriminatorOutput& out) {
  if (out.scores.empty()) throw UsageError("discriminator output has no scales");
  auto total = out.scores.front().mean();
  for (std::size_t s = 1; s < out.scores.size(); ++s) total = total + out.scores[s].mean();
  return total;
}

torch::Tensor generator_adversarial_loss(const DiscriminatorOutput& d_identity_fake,
                                         const DiscriminatorOutput& d_pose_fake, double lambda_I,
                                         double lambda_P) {
  return aggregate_score(d_identity_fake) * -lambda_I - aggregate_score(d_pose_fake) * lambda_P;
}

torch::Tensor hinge_discriminator_loss(const DiscriminatorOutput& real, const DiscriminatorOutput& fake) {
  if (real.scores.size() != fake.scores.size() || real.scores.empty())
    throw UsageError("hinge loss: real and fake outputs have different scale counts");
  torch::Tensor total;
  for (std::size_t s = 0; s < real.scores.size(); ++s) {
    auto term = torch::relu(1.0 - real.scores[s].mean()) + torch::relu(1.0 + fake.scores[s].mean());
    total = s == 0 ? term : total + term;
  }
  return total;
}

torch::Tensor feature_matching_loss(const DiscriminatorOutput& real, const DiscriminatorOutput& fake) {
  if (real.features.size() != fake.features.size() || real.features.empty())
    throw UsageError("feature matching: " + std::to_string(real.features.size()) + " vs " +
                     std::to_string(fake.features.size()) + " scales");
  torch::Tensor total;
  for (std::size_t s = 0; s < real.features.size(); ++s) {
    const auto& rf = real.features[s];
    const auto& ff = fake.features[s];
    if (rf.size() != ff.size())
      throw UsageError("feature matching: scale " + std::to_string(s) + " has " +
                       std::to_string(rf.size()) + " vs " + std::to_string(ff.size()) + " layers");
    for (std::size_t j = 0; j < rf.size(); ++j) {
      if (rf[j].sizes() != ff[j].sizes())
        throw ShapeError("feature matching: layer shapes " + shape_string(rf[j]) + " vs " +
                         shape_string(ff[j]));
      auto term = (rf[j].detach() - ff[j]).abs().mean();
      total = total.defined() ? total + term : term;
    }
  }
  return total;
}

torch::Tensor perceptual_loss(const torch::Tensor& real, const torch::Tensor& fake,
                              const FeatureBackbone& backbone) {
  if (real.sizes() != fake.sizes())
    throw ShapeError("perceptual loss: " + shape_string(real) + " vs " + shape_string(fake));
  const auto r = backbone.taps(real.dim() == 3 ? real.unsqueeze(0) : real);
  const auto f = backbone.taps(fake.dim() == 3 ? fake.unsqueeze(0) : fake);
  const auto w = backbone.tap_weights();
  torch::Tensor total;
  for (std::size_t k = 0; k < r.size(); ++k) {
    auto term = (r[k] - f[k]).abs().mean() * w.at(k);
    total = total.defined() ? total + term : term;
  }
  return total;
}

}  // namespace cain
