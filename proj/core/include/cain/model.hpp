#pragma once

#include <vector>

#include <torch/torch.h>

#include "cain/config.hpp"
#include "cain/dataset.hpp"
#include "cain/discriminator.hpp"
#include "cain/embedder.hpp"
#include "cain/generator.hpp"

namespace cain {

/// The four networks: embedder E, generator G, identity and pose discriminators.
struct CainModel {
  explicit CainModel(const ModelConfig& config);

  ModelConfig config;
  TargetedEmbedder embedder{nullptr};
  Generator generator{nullptr};
  MultiScaleDiscriminator disc_identity{nullptr};
  MultiScaleDiscriminator disc_pose{nullptr};

  /// Parameters updated together by the generator optimizer (G then E).
  std::vector<torch::Tensor> generator_parameters() const;
  /// Parameters of D_I then D_P.
  std::vector<torch::Tensor> discriminator_parameters() const;

  void train(bool on = true);
  void to(torch::Dtype dtype);
};

/// Builds the networks with torch's global RNG seeded to `seed`.
CainModel make_model(const ModelConfig& config, std::uint64_t seed);

/// Same-K samples stacked along a batch dimension.
struct StackedBatch {
  torch::Tensor source_frames;     // [B,K,3,H,W]
  torch::Tensor source_landmarks;  // [B,K,3,H,W]
  torch::Tensor target_landmark;   // [B,3,H,W]
  torch::Tensor target_truth;      // [B,3,H,W]
  torch::Tensor identity_frame;    // [B,3,H,W], the first source of each sample
};

StackedBatch stack_batches(const std::vector<SampledBatch>& batches);

/// Embeds every source in one pass and fuses them into e_x: [B,C_e,H/4,W/4].
torch::Tensor fuse_identity(CainModel& model, const torch::Tensor& source_frames,
                            const torch::Tensor& source_landmarks,
                            const torch::Tensor& target_landmark, const AblationFlags& ablations);

/// Inference path for a single sample: each source is embedded on its own, so the output is
/// bitwise independent of the order of the sources. Runs E and G in eval mode without grad.
torch::Tensor synthesize(CainModel& model, const std::vector<torch::Tensor>& source_frames,
                         const std::vector<torch::Tensor>& source_landmarks,
                         const torch::Tensor& target_landmark, const AblationFlags& ablations);

torch::Tensor synthesize(CainModel& model, const SampledBatch& batch, const AblationFlags& ablations);

}  // namespace cain
