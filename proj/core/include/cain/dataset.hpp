#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "cain/config.hpp"
#include "cain/landmarks.hpp"

namespace cain {

/// Frames of one person. Images are 3xHxW tensors in [-1, 1].
struct IdentitySequence {
  std::string identity_id;
  std::vector<torch::Tensor> frames;
  std::vector<LandmarkSet> landmarks;

  std::size_t size() const { return frames.size(); }
  int resolution() const { return frames.empty() ? 0 : static_cast<int>(frames.front().size(1)); }
};

/// K source (frame, landmark image) pairs plus the target pose and its ground truth.
struct SampledBatch {
  std::vector<std::pair<torch::Tensor, torch::Tensor>> sources;
  torch::Tensor target_landmark;
  torch::Tensor target_truth;
  std::vector<int> source_indices;  // frame index of each source
  int target_index = -1;
  int identity_frame_index = -1;  // frame index of the identity source (first drawn)

  int K() const { return static_cast<int>(sources.size()); }
};

inline constexpr int kSyntheticResolutions[] = {32, 64, 128};

/// Parametric cartoon face of identity `seed` with a smoothly moving pose.
IdentitySequence generate_synthetic_identity(std::uint64_t seed, int n_frames, int resolution);

/// Draws K+1 distinct frames uniformly; the last drawn one becomes the target.
SampledBatch sample_frames(const IdentitySequence& seq, int K, std::mt19937_64& rng);

/// Builds a batch from explicit frame indices (sources in the given order, then the target).
SampledBatch make_batch(const IdentitySequence& seq, const std::vector<int>& source_indices,
                        int target_index);

/// Throws DataError on inconsistent frame/landmark data.
void check_sequence(const IdentitySequence& seq);

/// Synthetic manifests hold `seeds`, `n_frames` and `resolution`; anything else means
/// frames and landmark files are read from `root/<identity_id>/`.
std::vector<IdentitySequence> load_dataset(const std::string& root, const KeyValueConfig& manifest);

/// Reads every identity directory under root.
std::vector<IdentitySequence> load_dataset(const std::string& root);

/// Writes `root/<identity_id>/<frame_idx>.png` and `.landmarks.json` for each frame.
void write_dataset(const std::string& root, const std::vector<IdentitySequence>& data);

/// Seeds of a manifest value like "0,1,5-8".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// Training identities first, validation identities (the last floor(n * fraction)) second.
std::pair<std::vector<IdentitySequence>, std::vector<IdentitySequence>> split_dataset(
    const std::vector<IdentitySequence>& data, double val_fraction);

}  // namespace cain
