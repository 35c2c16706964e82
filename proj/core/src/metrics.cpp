#include "cain/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

#include "cain/errors.hpp"

namespace cain {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_window() {
  std::vector<double> w(kWindow);
  double sum = 0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    w[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    sum += w[i];
  }
  for (auto& x : w) x /= sum;
  return w;
}

// Separable valid-mode filtering of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& k) {
  const int oh = h - kWindow + 1, ow = w - kWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * img[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double ssim(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes() || a.dim() != 3)
    throw ShapeError("ssim: images " + shape_string(a) + " and " + shape_string(b) +
                     " must have equal CxHxW shapes");
  const int c = static_cast<int>(a.size(0)), h = static_cast<int>(a.size(1)),
            w = static_cast<int>(a.size(2));
  if (h < kWindow || w < kWindow) throw ShapeError("ssim: images smaller than the 11x11 window");
  const auto ta = ((a.detach().to(torch::kFloat64) + 1.0) / 2.0).contiguous();
  const auto tb = ((b.detach().to(torch::kFloat64) + 1.0) / 2.0).contiguous();
  const double* pa = ta.data_ptr<double>();
  const double* pb = tb.data_ptr<double>();
  const auto k = gaussian_window();
  const auto plane = static_cast<std::size_t>(h) * w;

  double total = 0;
  std::size_t count = 0;
  for (int ch = 0; ch < c; ++ch) {
    std::vector<double> x(pa + ch * plane, pa + (ch + 1) * plane);
    std::vector<double> y(pb + ch * plane, pb + (ch + 1) * plane);
    std::vector<double> xx(plane), yy(plane), xy(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, k), my = filter_valid(y, h, w, k);
    const auto sxx = filter_valid(xx, h, w, k), syy = filter_valid(yy, h, w, k),
               sxy = filter_valid(xy, h, w, k);
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      total += ((2 * mx[i] * my[i] + kC1) * (2 * cov + kC2)) /
               ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
    }
    count += mx.size();
  }
  return total / static_cast<double>(count);
}

CosineSimilarity cosine_similarity(const torch::Tensor& u, const torch::Tensor& v) {
  if (u.numel() != v.numel())
    throw UsageError("cosine similarity: embedding lengths " + std::to_string(u.numel()) + " vs " +
                     std::to_string(v.numel()));
  const auto a = u.detach().to(torch::kFloat64).flatten();
  const auto b = v.detach().to(torch::kFloat64).flatten();
  const double na = a.norm().item<double>(), nb = b.norm().item<double>();
  if (na < 1e-12 || nb < 1e-12) return {0.0, true};
  const double c = a.dot(b).item<double>() / (na * nb);
  return {std::clamp(c, -1.0, 1.0), false};
}

CosineSimilarity csim(const torch::Tensor& a, const torch::Tensor& b, const FaceEmbedder& face_net) {
  if (a.sizes() != b.sizes())
    throw ShapeError("csim: images " + shape_string(a) + " and " + shape_string(b) + " differ");
  return cain::cosine_similarity(face_net.embed(a), face_net.embed(b));
}

FeatureStats::FeatureStats(int dim)
    : mean_(Eigen::VectorXd::Zero(dim)), scatter_(Eigen::MatrixXd::Zero(dim, dim)) {}

void FeatureStats::add(const Eigen::VectorXd& x) {
  if (x.size() != mean_.size())
    throw UsageError("FeatureStats: vector of length " + std::to_string(x.size()) +
                     " added to stats of dimension " + std::to_string(mean_.size()));
  ++n_;
  const Eigen::VectorXd delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  scatter_ += delta * (x - mean_).transpose();
}

void FeatureStats::add_rows(const torch::Tensor& rows) {
  if (rows.dim() != 2) throw ShapeError("FeatureStats: expected [N, d], got " + shape_string(rows));
  const auto r = rows.detach().to(torch::kFloat64).contiguous();
  const int d = static_cast<int>(r.size(1));
  for (int64_t i = 0; i < r.size(0); ++i)
    add(Eigen::Map<const Eigen::VectorXd>(r.data_ptr<double>() + i * d, d));
}

void FeatureStats::merge(const FeatureStats& other) {
  if (other.dim() != dim())
    throw UsageError("FeatureStats: merging dimension " + std::to_string(other.dim()) + " into " +
                     std::to_string(dim()));
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const auto n = static_cast<double>(n_ + other.n_);
  const Eigen::VectorXd delta = other.mean_ - mean_;
  scatter_ += other.scatter_ + delta * delta.transpose() * (static_cast<double>(n_) * other.n_ / n);
  mean_ += delta * (static_cast<double>(other.n_) / n);
  n_ += other.n_;
}

Eigen::MatrixXd FeatureStats::covariance() const {
  if (n_ < 2) throw UsageError("FeatureStats: covariance needs at least 2 samples");
  Eigen::MatrixXd c = scatter_ / static_cast<double>(n_ - 1);
  return (c + c.transpose()) / 2.0;
}

double frechet_distance(const Eigen::VectorXd& mu_r, const Eigen::MatrixXd& sigma_r,
                        const Eigen::VectorXd& mu_f, const Eigen::MatrixXd& sigma_f) {
  const auto d = mu_r.size();
  if (mu_f.size() != d || sigma_r.rows() != d || sigma_r.cols() != d || sigma_f.rows() != d ||
      sigma_f.cols() != d)
    throw UsageError("fid: dimension mismatch");
  // Tr((S_r S_f)^{1/2}) = Tr((S_r^{1/2} S_f S_r^{1/2})^{1/2}); the inner matrix is symmetric PSD.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(sigma_r);
  const Eigen::VectorXd root_vals = er.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd root_r = er.eigenvectors() * root_vals.asDiagonal() * er.eigenvectors().transpose();
  Eigen::MatrixXd inner = root_r * sigma_f * root_r;
  inner = (inner + inner.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ei(inner, Eigen::EigenvaluesOnly);
  const double trace_sqrt = ei.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mu_r - mu_f).squaredNorm() + sigma_r.trace() + sigma_f.trace() - 2.0 * trace_sqrt;
  return std::max(value, 0.0);
}

double fid(const FeatureStats& real, const FeatureStats& fake) {
  if (real.dim() != fake.dim())
    throw UsageError("fid: feature dimensions " + std::to_string(real.dim()) + " vs " +
                     std::to_string(fake.dim()));
  return frechet_distance(real.mean(), real.covariance(), fake.mean(), fake.covariance());
}

}  // namespace cain
