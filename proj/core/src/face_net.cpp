#include "cain/face_net.hpp"

#include <random>

#include "cain/dataset.hpp"
#include "cain/errors.hpp"

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace cain {

FaceEmbedNetImpl::FaceEmbedNetImpl() {
  body = register_module(
      "body", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(3, 16, 3).stride(2).padding(1)), nn::ReLU(),
                             nn::Conv2d(nn::Conv2dOptions(16, 32, 3).stride(2).padding(1)), nn::ReLU(),
                             nn::Conv2d(nn::Conv2dOptions(32, 64, 3).stride(2).padding(1)), nn::ReLU()));
  head = register_module("head", nn::Linear(64, kDim));
}

torch::Tensor FaceEmbedNetImpl::forward(const torch::Tensor& images) {
  auto h = body->forward(images).mean({2, 3});
  return F::normalize(head(h), F::NormalizeFuncOptions().dim(1));
}

TrainedFaceEmbedder::TrainedFaceEmbedder(FaceEmbedNet net, std::string id)
    : net_(std::move(net)), id_(std::move(id)) {
  net_->eval();
  for (auto& p : net_->parameters()) p.set_requires_grad(false);
}

torch::Tensor TrainedFaceEmbedder::embed(const torch::Tensor& image) const {
  torch::NoGradGuard guard;
  const auto in = image.dim() == 3 ? image.unsqueeze(0) : image;
  return net_->forward(in.to(torch::kFloat32)).squeeze(0);
}

void TrainedFaceEmbedder::save(const std::string& path) const {
  torch::serialize::OutputArchive archive;
  net_->save(archive);
  archive.write("id", c10::IValue(id_));
  archive.save_to(path);
}

TrainedFaceEmbedder TrainedFaceEmbedder::load(const std::string& path) {
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path);
  } catch (const c10::Error& e) {
    throw IoError("cannot load face embedder " + path);
  }
  FaceEmbedNet net;
  net->load(archive);
  c10::IValue id;
  archive.read("id", id);
  return TrainedFaceEmbedder(net, id.toStringRef());
}

TrainedFaceEmbedder train_face_embedder(const FaceNetOptions& o) {
  if (o.identities < 2 || o.frames_per_identity < 2)
    throw UsageError("face embedder training needs >= 2 identities with >= 2 frames");
  std::vector<IdentitySequence> people;
  for (int i = 0; i < o.identities; ++i)
    people.push_back(generate_synthetic_identity(o.first_identity_seed + static_cast<std::uint64_t>(i),
                                                 o.frames_per_identity, o.resolution));

  torch::manual_seed(o.seed);
  FaceEmbedNet net;
  torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(o.learning_rate));
  std::mt19937_64 rng(o.seed);
  std::uniform_int_distribution<int> pick_id(0, o.identities - 1);
  std::uniform_int_distribution<int> pick_frame(0, o.frames_per_identity - 1);

  for (int step = 0; step < o.steps; ++step) {
    std::vector<torch::Tensor> anchors, positives, negatives;
    for (int b = 0; b < o.batch; ++b) {
      const int who = pick_id(rng);
      int other = pick_id(rng);
      while (other == who) other = pick_id(rng);
      const int fa = pick_frame(rng);
      int fp = pick_frame(rng);
      while (fp == fa) fp = pick_frame(rng);
      anchors.push_back(people[who].frames[fa]);
      positives.push_back(people[who].frames[fp]);
      negatives.push_back(people[other].frames[pick_frame(rng)]);
    }
    auto a = net->forward(torch::stack(anchors));
    auto p = net->forward(torch::stack(positives));
    auto n = net->forward(torch::stack(negatives));
    auto loss = F::triplet_margin_loss(a, p, n, F::TripletMarginLossFuncOptions().margin(o.margin));
    opt.zero_grad();
    loss.backward();
    opt.step();
  }
  return TrainedFaceEmbedder(net, "facenet_triplet_seed" + std::to_string(o.seed) + "_res" +
                                      std::to_string(o.resolution));
}

}  // namespace cain
