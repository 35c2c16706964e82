#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <torch/torch.h>

namespace cain {

/// Mean local SSIM over channels: 11x11 Gaussian window (sigma 1.5), valid positions only,
/// images mapped from [-1, 1] to [0, 1] with L = 1.
double ssim(const torch::Tensor& a, const torch::Tensor& b);

struct CosineSimilarity {
  double value = 0.0;
  bool degenerate = false;  // an embedding had norm < 1e-12; value is 0
};

CosineSimilarity cosine_similarity(const torch::Tensor& u, const torch::Tensor& v);

/// Maps a 3xHxW image to a fixed-length identity embedding.
class FaceEmbedder {
 public:
  virtual ~FaceEmbedder() = default;
  virtual torch::Tensor embed(const torch::Tensor& image) const = 0;
};

CosineSimilarity csim(const torch::Tensor& a, const torch::Tensor& b, const FaceEmbedder& face_net);

/// Streaming Gaussian moments of feature vectors; mergeable in any order.
class FeatureStats {
 public:
  explicit FeatureStats(int dim = 0);

  void add(const Eigen::VectorXd& x);
  /// Adds every row of an [N, d] tensor.
  void add_rows(const torch::Tensor& rows);
  void merge(const FeatureStats& other);

  int dim() const { return static_cast<int>(mean_.size()); }
  std::int64_t count() const { return n_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  /// Unbiased (n - 1) covariance; requires count() >= 2.
  Eigen::MatrixXd covariance() const;

 private:
  std::int64_t n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;  // sum of outer products of deviations
};

/// Frechet distance between Gaussians given directly by their moments.
double frechet_distance(const Eigen::VectorXd& mu_r, const Eigen::MatrixXd& sigma_r,
                        const Eigen::VectorXd& mu_f, const Eigen::MatrixXd& sigma_f);

double fid(const FeatureStats& real, const FeatureStats& fake);

}  // namespace cain
