#pragma once

#include <array>
#include <cstdint>

#include <torch/torch.h>

#include "cain/landmarks.hpp"

namespace cain {

using Rgb = std::array<double, 3>;  // components in [0, 1]

/// Seed-fixed appearance and geometry of a cartoon face, plus its motion pattern.
struct FaceIdentity {
  std::uint64_t seed = 0;
  Rgb skin{}, hair{}, iris{}, background{}, lip{}, mouth_interior{};
  double face_half_width = 0.3;
  double face_half_height = 0.38;
  double eye_spacing = 0.11;
  double eye_half_width = 0.04;
  double brow_height = 0.05;
  double nose_length = 0.11;
  double mouth_half_width = 0.08;
  double hair_volume = 1.1;
  // Angular frequencies (radians per frame) and phases of the pose trajectory.
  std::array<double, 5> frequency{};
  std::array<double, 5> phase{};

  bool operator==(const FaceIdentity&) const = default;
};

/// Per-frame head pose and expression.
struct FacePose {
  double yaw = 0.0;         // [-1, 1], positive turns features to image-right
  double pitch = 0.0;       // [-1, 1], positive moves features down
  double roll = 0.0;        // radians
  double mouth_open = 0.0;  // [0, 1]
  double eye_open = 1.0;    // [0, 1]
};

FaceIdentity identity_from_seed(std::uint64_t seed);

/// Smooth trajectory: each pose parameter is a sinusoid of the frame index.
FacePose pose_for_frame(const FaceIdentity& id, int frame);

/// 68 analytic landmarks of the face in the given pose.
LandmarkSet face_landmarks(const FaceIdentity& id, const FacePose& pose);

/// 3xRxR image in [-1, 1].
torch::Tensor render_face(const FaceIdentity& id, const FacePose& pose, int resolution);

}  // namespace cain
