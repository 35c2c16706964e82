#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace cain {

enum class LandmarkGroup : int { Jaw = 0, Brows = 1, Nose = 2, Eyes = 3, Mouth = 4 };

inline constexpr int kLandmarkGroups = 5;
inline constexpr int kDefaultLandmarkCount = 68;

/// Facial keypoints in normalized image space, u to the right and v downwards.
struct LandmarkSet {
  std::vector<std::pair<double, double>> points;
  std::vector<int> groups;

  std::size_t size() const { return points.size(); }
  bool operator==(const LandmarkSet&) const = default;
};

/// Group label of each point in the 68-point topology.
std::vector<int> default_landmark_groups();

/// Polyline segments (index pairs) to draw. The 68-point topology uses the usual
/// open/closed contours; other counts join consecutive points of the same group.
std::vector<std::pair<int, int>> landmark_segments(const LandmarkSet& lm);

/// RGB color of each group in [-1, 1].
std::array<float, 3> group_color(int group);

/// Throws DataError when points are non-finite, outside [0,1]^2 or groups are inconsistent.
void check_landmarks(const LandmarkSet& lm);

/// 3xRxR landmark image: 1-pixel group-colored polylines on a -1 background.
torch::Tensor rasterize_landmarks(const LandmarkSet& lm, int resolution);

/// Pixel column/row of a normalized coordinate: floor(c * resolution), clamped.
int to_pixel(double coord, int resolution);

/// Mirror u -> 1 - u keeping point order and groups.
LandmarkSet mirror_horizontally(const LandmarkSet& lm);

LandmarkSet read_landmarks_json(const std::string& path);
void write_landmarks_json(const std::string& path, const LandmarkSet& lm);

}  // namespace cain
