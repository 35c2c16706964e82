#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cain/backbone.hpp"
#include "cain/losses.hpp"
#include "cain/model.hpp"

namespace fs = std::filesystem;

namespace cain::testing {

TrainConfig tiny_config() {
  TrainConfig c;
  c.K = 2;
  c.epochs = 4;
  c.batch_size = 2;
  c.resolution = 32;
  c.checkpoint_every = 0;
  c.validate_every = 0;
  c.val_fraction = 0.0;
  c.model.embed_channels = 8;
  c.model.gen_channels = 8;
  c.model.gen_max_channels = 16;
  c.model.gen_down = 3;
  c.model.gen_same = 1;
  c.model.disc_channels = 8;
  c.model.disc_scales = 2;
  return c;
}

std::vector<IdentitySequence> tiny_data(int identities, int frames, int resolution, std::uint64_t first_seed) {
  std::vector<IdentitySequence> out;
  for (int i = 0; i < identities; ++i)
    out.push_back(generate_synthetic_identity(first_seed + static_cast<std::uint64_t>(i), frames, resolution));
  return out;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("cain_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::vector<torch::Tensor> snapshot(const std::vector<torch::Tensor>& params) {
  std::vector<torch::Tensor> out;
  for (const auto& p : params) out.push_back(p.detach().clone());
  return out;
}

bool identical(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].sizes() != b[i].sizes() || !torch::equal(a[i].detach(), b[i].detach())) return false;
  return true;
}

bool all_changed(const std::vector<torch::Tensor>& before, const std::vector<torch::Tensor>& after) {
  for (std::size_t i = 0; i < before.size(); ++i)
    if (torch::equal(before[i].detach(), after[i].detach())) return false;
  return true;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

oracle::GradCheck generator_objective_gradient_check(const GradCheckScope& scope, std::uint64_t seed) {
  ModelConfig mc;
  mc.embed_channels = 4;
  mc.gen_channels = 4;
  mc.gen_max_channels = 8;
  mc.gen_down = 2;
  mc.gen_same = 1;
  mc.disc_channels = 4;
  mc.disc_scales = 2;
  CainModel model = make_model(mc, seed);
  model.to(torch::kFloat64);
  model.train(false);
  RandomConvBackbone backbone(mc.backbone_seed);
  backbone.to(torch::kFloat64);

  const auto opts = torch::TensorOptions().dtype(torch::kFloat64);
  torch::manual_seed(seed + 1);
  const auto frames = torch::rand({1, 2, 3, 8, 8}, opts) * 2 - 1;
  const auto lms = torch::rand({1, 2, 3, 8, 8}, opts) * 2 - 1;
  const auto target_lm = torch::rand({1, 3, 8, 8}, opts) * 2 - 1;
  const auto truth = torch::rand({1, 3, 8, 8}, opts) * 2 - 1;
  const LossWeights w;
  const double lambda_I = 0.55;

  auto loss_fn = [&]() {
    const auto e_x = fuse_identity(model, frames, lms, target_lm, {});
    const auto fake = model.generator->forward(target_lm, e_x);
    const auto ident = frames.select(1, 0);
    const auto fake_I = model.disc_identity->forward(fake, ident);
    const auto fake_P = model.disc_pose->forward(fake, target_lm);
    const auto real_I = model.disc_identity->forward(truth, ident);
    const auto real_P = model.disc_pose->forward(truth, target_lm);
    const auto adv = generator_adversarial_loss(fake_I, fake_P, lambda_I, w.lambda_P);
    return total_generator_loss(adv, feature_matching_loss(real_I, fake_I), feature_matching_loss(real_P, fake_P),
                                perceptual_loss(truth, fake, backbone), w, lambda_I);
  };

  std::vector<torch::Tensor> params;
  if (scope.embedder)
    for (auto& p : model.embedder->parameters()) params.push_back(p);
  if (scope.generator)
    for (auto& p : model.generator->parameters()) params.push_back(p);
  for (auto& p : model.discriminator_parameters()) p.set_requires_grad(false);
  for (auto& p : params) p.mutable_grad() = torch::Tensor();
  loss_fn().backward();
  return oracle::finite_difference_check(loss_fn, params, 1e-6, 1e-3, scope.stride);
}

}  // namespace cain::testing
