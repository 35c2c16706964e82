#include "cain/landmarks.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "cain/errors.hpp"

namespace cain {

namespace {

// (first, last, closed) ranges of the 68-point contour layout.
struct Contour {
  int first;
  int last;
  bool closed;
};
constexpr std::array<Contour, 9> kContours68{{
    {0, 16, false},   // jaw
    {17, 21, false},  // right brow
    {22, 26, false},  // left brow
    {27, 30, false},  // nose bridge
    {31, 35, false},  // nostrils
    {36, 41, true},   // right eye
    {42, 47, true},   // left eye
    {48, 59, true},   // outer lip
    {60, 67, true},   // inner lip
}};

void plot_line(float* img, int res, int x0, int y0, int x1, int y1, const std::array<float, 3>& c) {
  const int n = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
  const auto plane = static_cast<std::size_t>(res) * res;
  for (int t = 0; t <= n; ++t) {
    // std::lround rounds halves away from zero, so mirrored endpoints give mirrored pixels.
    const long x = n == 0 ? x0 : x0 + std::lround(static_cast<double>(x1 - x0) * t / n);
    const long y = n == 0 ? y0 : y0 + std::lround(static_cast<double>(y1 - y0) * t / n);
    const auto idx = static_cast<std::size_t>(y) * res + static_cast<std::size_t>(x);
    img[idx] = c[0];
    img[plane + idx] = c[1];
    img[2 * plane + idx] = c[2];
  }
}

}  // namespace

std::vector<int> default_landmark_groups() {
  std::vector<int> g(kDefaultLandmarkCount);
  for (int i = 0; i < kDefaultLandmarkCount; ++i) {
    if (i <= 16)
      g[i] = static_cast<int>(LandmarkGroup::Jaw);
    else if (i <= 26)
      g[i] = static_cast<int>(LandmarkGroup::Brows);
    else if (i <= 35)
      g[i] = static_cast<int>(LandmarkGroup::Nose);
    else if (i <= 47)
      g[i] = static_cast<int>(LandmarkGroup::Eyes);
    else
      g[i] = static_cast<int>(LandmarkGroup::Mouth);
  }
  return g;
}

std::vector<std::pair<int, int>> landmark_segments(const LandmarkSet& lm) {
  std::vector<std::pair<int, int>> segs;
  const int n = static_cast<int>(lm.size());
  if (n == kDefaultLandmarkCount && lm.groups == default_landmark_groups()) {
    for (const auto& c : kContours68) {
      for (int i = c.first; i < c.last; ++i) segs.emplace_back(i, i + 1);
      if (c.closed) segs.emplace_back(c.last, c.first);
    }
    return segs;
  }
  for (int i = 0; i + 1 < n; ++i)
    if (lm.groups[i] == lm.groups[i + 1]) segs.emplace_back(i, i + 1);
  // Isolated points still need to show up.
  for (int i = 0; i < n; ++i) {
    const bool prev = i > 0 && lm.groups[i - 1] == lm.groups[i];
    const bool next = i + 1 < n && lm.groups[i + 1] == lm.groups[i];
    if (!prev && !next) segs.emplace_back(i, i);
  }
  return segs;
}

std::array<float, 3> group_color(int group) {
  switch (group) {
    case 0: return {1.0f, 1.0f, 1.0f};
    case 1: return {1.0f, -1.0f, -1.0f};
    case 2: return {-1.0f, 1.0f, -1.0f};
    case 3: return {-1.0f, -1.0f, 1.0f};
    case 4: return {1.0f, 1.0f, -1.0f};
    default: throw DataError("landmark group " + std::to_string(group) + " out of range");
  }
}

void check_landmarks(const LandmarkSet& lm) {
  if (lm.points.size() != lm.groups.size())
    throw DataError("landmark set has " + std::to_string(lm.points.size()) + " points but " +
                    std::to_string(lm.groups.size()) + " group labels");
  for (std::size_t i = 0; i < lm.points.size(); ++i) {
    const auto [u, v] = lm.points[i];
    if (!std::isfinite(u) || !std::isfinite(v) || u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0)
      throw DataError("landmark " + std::to_string(i) + " at (" + std::to_string(u) + ", " +
                      std::to_string(v) + ") lies outside [0,1]^2");
    if (lm.groups[i] < 0 || lm.groups[i] >= kLandmarkGroups)
      throw DataError("landmark " + std::to_string(i) + " has invalid group " +
                      std::to_string(lm.groups[i]));
  }
}

int to_pixel(double coord, int resolution) {
  const int p = static_cast<int>(std::floor(coord * resolution));
  return std::clamp(p, 0, resolution - 1);
}

torch::Tensor rasterize_landmarks(const LandmarkSet& lm, int resolution) {
  if (resolution < 1) throw UsageError("rasterize_landmarks: resolution must be positive");
  check_landmarks(lm);
  auto img = torch::full({3, resolution, resolution}, -1.0f);
  float* data = img.data_ptr<float>();
  for (const auto& [a, b] : landmark_segments(lm)) {
    plot_line(data, resolution, to_pixel(lm.points[a].first, resolution),
              to_pixel(lm.points[a].second, resolution), to_pixel(lm.points[b].first, resolution),
              to_pixel(lm.points[b].second, resolution), group_color(lm.groups[a]));
  }
  return img;
}

LandmarkSet mirror_horizontally(const LandmarkSet& lm) {
  LandmarkSet out = lm;
  for (auto& p : out.points) p.first = 1.0 - p.first;
  return out;
}

LandmarkSet read_landmarks_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing landmark file " + path);
  nlohmann::json j;
  try {
    in >> j;
    LandmarkSet lm;
    for (const auto& p : j.at("points")) {
      if (p.size() != 2) throw DataError("landmark point must have 2 coordinates in " + path);
      lm.points.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    lm.groups = j.at("groups").get<std::vector<int>>();
    check_landmarks(lm);
    return lm;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed landmark file " + path + ": " + e.what());
  }
}

void write_landmarks_json(const std::string& path, const LandmarkSet& lm) {
  nlohmann::json j;
  j["points"] = nlohmann::json::array();
  for (const auto& [u, v] : lm.points) j["points"].push_back({u, v});
  j["groups"] = lm.groups;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump() << '\n';
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace cain
