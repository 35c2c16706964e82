#pragma once

#include <torch/torch.h>

#include "cain/backbone.hpp"
#include "cain/config.hpp"
#include "cain/discriminator.hpp"

namespace cain {

/// Sum over scales of the mean patch score.
torch::Tensor aggregate_score(const DiscriminatorOutput& out);

/// -lambda_I * D_I(fake) - lambda_P * D_P(fake).
torch::Tensor generator_adversarial_loss(const DiscriminatorOutput& d_identity_fake,
                                         const DiscriminatorOutput& d_pose_fake, double lambda_I,
                                         double lambda_P);

/// Hinge loss per scale, summed: max(0, 1 - real_s) + max(0, 1 + fake_s).
torch::Tensor hinge_discriminator_loss(const DiscriminatorOutput& real, const DiscriminatorOutput& fake);

inline torch::Tensor identity_discriminator_loss(const DiscriminatorOutput& real,
                                                 const DiscriminatorOutput& fake) {
  return hinge_discriminator_loss(real, fake);
}

inline torch::Tensor pose_discriminator_loss(const DiscriminatorOutput& real,
                                             const DiscriminatorOutput& fake) {
  return hinge_discriminator_loss(real, fake);
}

/// Sum over (scale, layer) of the mean absolute feature difference. Real features are detached.
torch::Tensor feature_matching_loss(const DiscriminatorOutput& real, const DiscriminatorOutput& fake);

/// Weighted sum over backbone taps of the mean absolute activation difference.
torch::Tensor perceptual_loss(const torch::Tensor& real, const torch::Tensor& fake,
                              const FeatureBackbone& backbone);

/// adv + lambda_FM * (lambda_I * fm_I + lambda_P * fm_P) + lambda_VGG * vgg.
template <typename T>
T total_generator_loss(const T& adv, const T& fm_I, const T& fm_P, const T& vgg,
                       const LossWeights& w, double lambda_I) {
  return adv + (fm_I * lambda_I + fm_P * w.lambda_P) * w.lambda_FM + vgg * w.lambda_VGG;
}

}  // namespace cain
