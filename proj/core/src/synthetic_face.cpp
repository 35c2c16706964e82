#include "cain/synthetic_face.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace cain {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCenterU = 0.5;
constexpr double kCenterV = 0.52;

struct Point {
  double u;
  double v;
};

Rgb random_color(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return {d(rng), d(rng), d(rng)};
}

bool inside_polygon(const std::vector<Point>& poly, double u, double v) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.v > v) != (b.v > v) && u < (b.u - a.u) * (v - a.v) / (b.v - a.v) + a.u) in = !in;
  }
  return in;
}

double segment_distance(Point p, Point a, Point b) {
  const double du = b.u - a.u, dv = b.v - a.v;
  const double len2 = du * du + dv * dv;
  double t = len2 > 0 ? ((p.u - a.u) * du + (p.v - a.v) * dv) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double eu = a.u + t * du - p.u, ev = a.v + t * dv - p.v;
  return std::sqrt(eu * eu + ev * ev);
}

double polyline_distance(const std::vector<Point>& line, Point p) {
  double best = 1e9;
  for (std::size_t i = 0; i + 1 < line.size(); ++i)
    best = std::min(best, segment_distance(p, line[i], line[i + 1]));
  return best;
}

std::vector<Point> slice(const LandmarkSet& lm, int first, int last) {
  std::vector<Point> out;
  for (int i = first; i <= last; ++i) out.push_back({lm.points[i].first, lm.points[i].second});
  return out;
}

Point rotate(Point p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  const double du = p.u - kCenterU, dv = p.v - kCenterV;
  return {kCenterU + c * du - s * dv, kCenterV + s * du + c * dv};
}

}  // namespace

FaceIdentity identity_from_seed(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0x1234567ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  FaceIdentity id;
  id.seed = seed;
  const double tone = range(0.35, 0.95);
  id.skin = {tone, tone * range(0.7, 0.85), tone * range(0.55, 0.75)};
  id.hair = random_color(rng, 0.02, 0.6);
  id.iris = random_color(rng, 0.05, 0.7);
  id.background = random_color(rng, 0.1, 0.9);
  id.lip = {range(0.55, 0.9), range(0.15, 0.35), range(0.2, 0.4)};
  id.mouth_interior = {range(0.15, 0.3), 0.03, 0.05};
  id.face_half_width = range(0.24, 0.32);
  id.face_half_height = range(0.31, 0.39);
  id.eye_spacing = range(0.085, 0.125);
  id.eye_half_width = range(0.03, 0.045);
  id.brow_height = range(0.035, 0.06);
  id.nose_length = range(0.08, 0.13);
  id.mouth_half_width = range(0.06, 0.1);
  id.hair_volume = range(1.05, 1.2);
  for (int k = 0; k < 5; ++k) {
    id.frequency[k] = range(0.25, 0.7);
    id.phase[k] = range(0.0, 2.0 * kPi);
  }
  return id;
}

FacePose pose_for_frame(const FaceIdentity& id, int frame) {
  auto wave = [&](int k) { return std::sin(id.frequency[k] * frame + id.phase[k]); };
  FacePose p;
  p.yaw = 0.8 * wave(0);
  p.pitch = 0.6 * wave(1);
  p.roll = 0.15 * wave(2);
  p.mouth_open = 0.5 + 0.5 * wave(3);
  p.eye_open = std::clamp(0.75 + 0.5 * wave(4), 0.0, 1.0);
  return p;
}

LandmarkSet face_landmarks(const FaceIdentity& id, const FacePose& pose) {
  std::vector<Point> pts;
  pts.reserve(kDefaultLandmarkCount);
  const double cu = kCenterU, cv = kCenterV;
  const double a = id.face_half_width, b = id.face_half_height;
  const double feat_u = cu + 0.06 * pose.yaw;
  const double feat_v = cv + 0.04 * pose.pitch;

  // Jaw: lower half of the face ellipse; the chin follows the yaw.
  for (int k = 0; k <= 16; ++k) {
    const double theta = kPi - kPi * k / 16.0;
    const double s = std::sin(theta);
    pts.push_back({cu + a * std::cos(theta) + 0.05 * pose.yaw * s,
                   cv + 0.1 * b + 0.9 * b * s + 0.02 * pose.pitch * s});
  }

  const double eye_v = feat_v - 0.06;
  const double ew = id.eye_half_width;
  const double eh = std::max(0.004, ew * 0.5 * pose.eye_open);

  // Brows.
  for (int side : {-1, 1}) {
    const double eu = feat_u + side * id.eye_spacing;
    for (int k = 0; k < 5; ++k) {
      const double t = k / 4.0;
      const double du = (-1.3 + 2.6 * t) * ew;
      pts.push_back({eu + du, eye_v - id.brow_height - 0.015 * std::sin(kPi * t)});
    }
  }

  // Nose bridge and nostrils.
  const double nose_u = feat_u + 0.02 * pose.yaw;
  for (int k = 0; k < 4; ++k) pts.push_back({nose_u, eye_v + 0.01 + id.nose_length * k / 3.0});
  const double nostril_v = eye_v + 0.01 + id.nose_length + 0.012;
  for (int k = 0; k < 5; ++k) {
    const double du = (-1.0 + 0.5 * k) * 0.035;
    pts.push_back({nose_u + du, nostril_v + 0.006 * (1.0 - std::abs(du) / 0.035)});
  }

  // Eyes, each corner-upper-upper-corner-lower-lower.
  for (int side : {-1, 1}) {
    const double eu = feat_u + side * id.eye_spacing;
    const std::array<Point, 6> shape{{{-ew, 0}, {-ew / 3, -eh}, {ew / 3, -eh},
                                      {ew, 0}, {ew / 3, eh}, {-ew / 3, eh}}};
    for (const auto& s : shape) pts.push_back({eu + s.u, eye_v + s.v});
  }

  // Mouth: outer contour then inner contour.
  const double mw = id.mouth_half_width;
  const double mouth_v = feat_v + 0.155;
  const double upper = 0.014;
  const double lower = 0.012 + 0.05 * pose.mouth_open;
  for (int k = 0; k <= 6; ++k)
    pts.push_back({feat_u - mw + 2 * mw * k / 6.0, mouth_v - upper * std::sin(kPi * k / 6.0)});
  for (int k = 5; k >= 1; --k)
    pts.push_back({feat_u - mw + 2 * mw * k / 6.0, mouth_v + lower * std::sin(kPi * k / 6.0)});
  const double iw = 0.8 * mw;
  const double inner_lower = 0.002 + 0.045 * pose.mouth_open;
  for (int k = 0; k <= 4; ++k)
    pts.push_back({feat_u - iw + 2 * iw * k / 4.0, mouth_v - 0.003 * std::sin(kPi * k / 4.0)});
  for (int k = 3; k >= 1; --k)
    pts.push_back({feat_u - iw + 2 * iw * k / 4.0, mouth_v + inner_lower * std::sin(kPi * k / 4.0)});

  LandmarkSet lm;
  lm.groups = default_landmark_groups();
  for (auto p : pts) {
    p = rotate(p, pose.roll);
    lm.points.emplace_back(std::clamp(p.u, 0.0, 1.0), std::clamp(p.v, 0.0, 1.0));
  }
  return lm;
}

torch::Tensor render_face(const FaceIdentity& id, const FacePose& pose, int resolution) {
  const LandmarkSet lm = face_landmarks(id, pose);
  const auto jaw = slice(lm, 0, 16);
  const auto brow_r = slice(lm, 17, 21), brow_l = slice(lm, 22, 26);
  const auto bridge = slice(lm, 27, 30), nostrils = slice(lm, 31, 35);
  const auto eye_r = slice(lm, 36, 41), eye_l = slice(lm, 42, 47);
  const auto outer_lip = slice(lm, 48, 59), inner_lip = slice(lm, 60, 67);

  // Closed face outline: the jaw plus an upper ellipse arc from the right ear back to the left.
  std::vector<Point> face = jaw;
  const Point left = jaw.front(), right = jaw.back();
  const Point mid{(left.u + right.u) / 2, (left.v + right.v) / 2};
  const double half = std::hypot(right.u - left.u, right.v - left.v) / 2;
  const double tilt = std::atan2(right.v - left.v, right.u - left.u);
  for (int k = 1; k < 16; ++k) {
    const double theta = kPi * k / 16.0;
    const double du = half * std::cos(theta), dv = -id.face_half_height * 0.95 * std::sin(theta);
    face.push_back({mid.u + du * std::cos(tilt) - dv * std::sin(tilt),
                    mid.v + du * std::sin(tilt) + dv * std::cos(tilt)});
  }

  auto eye_center = [](const std::vector<Point>& e) {
    return Point{(e[0].u + e[3].u) / 2, (e[0].v + e[3].v) / 2};
  };
  const Point iris_r = eye_center(eye_r), iris_l = eye_center(eye_l);
  const double iris_radius = id.eye_half_width * 0.5;
  const Point hair_center = rotate({kCenterU + 0.02 * pose.yaw, kCenterV - 0.09}, pose.roll);
  const double hair_a = id.face_half_width * id.hair_volume;
  const double hair_b = id.face_half_height * id.hair_volume;
  const double shade = 0.12 * pose.yaw;

  auto out = torch::empty({3, resolution, resolution});
  float* data = out.data_ptr<float>();
  const auto plane = static_cast<std::size_t>(resolution) * resolution;
  for (int y = 0; y < resolution; ++y) {
    for (int x = 0; x < resolution; ++x) {
      const Point p{(x + 0.5) / resolution, (y + 0.5) / resolution};
      Rgb c = id.background;
      const double hu = (p.u - hair_center.u) / hair_a, hv = (p.v - hair_center.v) / hair_b;
      if (hu * hu + hv * hv <= 1.0 && p.v < kCenterV + 0.1) c = id.hair;
      if (inside_polygon(face, p.u, p.v)) {
        // Side lighting follows the yaw.
        const double light = 1.0 + shade * (p.u - kCenterU) / id.face_half_width;
        for (int k = 0; k < 3; ++k) c[k] = std::clamp(id.skin[k] * light, 0.0, 1.0);
        if (polyline_distance(brow_r, p) < 0.012 || polyline_distance(brow_l, p) < 0.012) c = id.hair;
        if (polyline_distance(bridge, p) < 0.006 || polyline_distance(nostrils, p) < 0.006)
          for (int k = 0; k < 3; ++k) c[k] = id.skin[k] * 0.7;
        for (const auto* eye : {&eye_r, &eye_l}) {
          if (inside_polygon(*eye, p.u, p.v)) {
            c = {0.95, 0.95, 0.95};
            const Point ic = eye == &eye_r ? iris_r : iris_l;
            if (std::hypot(p.u - ic.u, p.v - ic.v) < iris_radius) c = id.iris;
          }
        }
        if (inside_polygon(outer_lip, p.u, p.v)) c = id.lip;
        if (inside_polygon(inner_lip, p.u, p.v)) c = id.mouth_interior;
      }
      const auto idx = static_cast<std::size_t>(y) * resolution + x;
      for (int k = 0; k < 3; ++k) data[k * plane + idx] = static_cast<float>(2.0 * c[k] - 1.0);
    }
  }
  return out;
}

}  // namespace cain
