#pragma once

#include <cstdint>
#include <string>

#include <torch/torch.h>

#include "cain/metrics.hpp"

namespace cain {

struct FaceNetOptions {
  std::uint64_t seed = 4242;
  int resolution = 64;
  int identities = 16;
  int frames_per_identity = 8;
  int steps = 200;
  int batch = 16;
  double margin = 0.3;
  double learning_rate = 1e-3;
  /// Synthetic identity seeds start here, away from any training seeds.
  std::uint64_t first_identity_seed = 1000000;
};

/// Small conv encoder producing L2-normalized 128-d identity embeddings.
struct FaceEmbedNetImpl : torch::nn::Module {
  static constexpr int kDim = 128;
  FaceEmbedNetImpl();
  torch::Tensor forward(const torch::Tensor& images);  // [B,3,H,W] -> [B,kDim]

  torch::nn::Sequential body{nullptr};
  torch::nn::Linear head{nullptr};
};
TORCH_MODULE(FaceEmbedNet);

/// Frozen face embedder for CSIM.
class TrainedFaceEmbedder : public FaceEmbedder {
 public:
  TrainedFaceEmbedder(FaceEmbedNet net, std::string id);
  torch::Tensor embed(const torch::Tensor& image) const override;
  const std::string& id() const { return id_; }
  void save(const std::string& path) const;
  static TrainedFaceEmbedder load(const std::string& path);

 private:
  mutable FaceEmbedNet net_;
  std::string id_;
};

/// Trains the embedder with a triplet margin objective on held-out synthetic identities.
TrainedFaceEmbedder train_face_embedder(const FaceNetOptions& options);

}  // namespace cain
