#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "cain/config.hpp"
#include "cain/dataset.hpp"
#include "oracles.hpp"

namespace cain::testing {

/// Narrow networks at 32x32 so a train step takes milliseconds.
TrainConfig tiny_config();

std::vector<IdentitySequence> tiny_data(int identities, int frames, int resolution = 32,
                                        std::uint64_t first_seed = 100);

/// Fresh directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& child) const { return (path_ / child).string(); }

 private:
  std::filesystem::path path_;
};

std::vector<torch::Tensor> snapshot(const std::vector<torch::Tensor>& params);
/// Same shapes and bitwise-equal values.
bool identical(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b);
/// True when every tensor differs from its counterpart somewhere.
bool all_changed(const std::vector<torch::Tensor>& before, const std::vector<torch::Tensor>& after);

std::string read_file(const std::string& path);

struct GradCheckScope {
  bool embedder = true;
  bool generator = true;
  int stride = 1;
};

/// Float64 finite-difference check of the generator objective (adversarial + feature matching +
/// perceptual terms) with respect to embedder and generator parameters, on tiny 8x8 networks in
/// eval mode.
oracle::GradCheck generator_objective_gradient_check(const GradCheckScope& scope = {},
                                                     std::uint64_t seed = 3);

}  // namespace cain::testing
