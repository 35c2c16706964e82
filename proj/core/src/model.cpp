#include "cain/model.hpp"

#include "cain/errors.hpp"

namespace cain {

namespace {

void append(std::vector<torch::Tensor>& dst, const std::vector<torch::Tensor>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

// Restores the training flag of a module on scope exit.
class ModeGuard {
 public:
  explicit ModeGuard(torch::nn::Module& m) : module_(m), was_training_(m.is_training()) {
    module_.eval();
  }
  ~ModeGuard() { module_.train(was_training_); }
  ModeGuard(const ModeGuard&) = delete;
  ModeGuard& operator=(const ModeGuard&) = delete;

 private:
  torch::nn::Module& module_;
  bool was_training_;
};

}  // namespace

CainModel::CainModel(const ModelConfig& cfg) : config(cfg) {
  embedder = TargetedEmbedder(cfg.embed_channels);
  GeneratorOptions g;
  g.base_channels = cfg.gen_channels;
  g.max_channels = cfg.gen_max_channels;
  g.down = cfg.gen_down;
  g.same = cfg.gen_same;
  g.embed_channels = cfg.embed_channels;
  generator = Generator(g);
  disc_identity = MultiScaleDiscriminator(6, cfg.disc_channels, cfg.disc_scales);
  disc_pose = MultiScaleDiscriminator(6, cfg.disc_channels, cfg.disc_scales);
}

std::vector<torch::Tensor> CainModel::generator_parameters() const {
  std::vector<torch::Tensor> p;
  append(p, generator->parameters());
  append(p, embedder->parameters());
  return p;
}

std::vector<torch::Tensor> CainModel::discriminator_parameters() const {
  std::vector<torch::Tensor> p;
  append(p, disc_identity->parameters());
  append(p, disc_pose->parameters());
  return p;
}

void CainModel::train(bool on) {
  embedder->train(on);
  generator->train(on);
  disc_identity->train(on);
  disc_pose->train(on);
}

void CainModel::to(torch::Dtype dtype) {
  embedder->to(dtype);
  generator->to(dtype);
  disc_identity->to(dtype);
  disc_pose->to(dtype);
}

CainModel make_model(const ModelConfig& config, std::uint64_t seed) {
  torch::manual_seed(seed);
  return CainModel(config);
}

StackedBatch stack_batches(const std::vector<SampledBatch>& batches) {
  if (batches.empty()) throw UsageError("stack_batches: empty batch");
  const int K = batches.front().K();
  std::vector<torch::Tensor> frames, lms, targets_lm, truths, ids;
  for (const auto& b : batches) {
    if (b.K() != K) throw UsageError("stack_batches: samples use different K");
    std::vector<torch::Tensor> f, l;
    for (const auto& [frame, lm] : b.sources) {
      f.push_back(frame);
      l.push_back(lm);
    }
    frames.push_back(torch::stack(f));
    lms.push_back(torch::stack(l));
    targets_lm.push_back(b.target_landmark);
    truths.push_back(b.target_truth);
    ids.push_back(b.sources.front().first);
  }
  return {torch::stack(frames), torch::stack(lms), torch::stack(targets_lm), torch::stack(truths),
          torch::stack(ids)};
}

torch::Tensor fuse_identity(CainModel& model, const torch::Tensor& source_frames,
                            const torch::Tensor& source_landmarks,
                            const torch::Tensor& target_landmark, const AblationFlags& ablations) {
  const auto B = source_frames.size(0), K = source_frames.size(1);
  const auto H = source_frames.size(3), W = source_frames.size(4);
  auto targets = target_landmark.unsqueeze(1).expand({B, K, 3, H, W});
  if (ablations.no_targeting) targets = torch::zeros_like(targets);
  auto [e, r] = model.embedder->forward(source_frames.reshape({B * K, 3, H, W}),
                                        source_landmarks.reshape({B * K, 3, H, W}),
                                        targets.reshape({B * K, 3, H, W}));
  e = e.reshape({B, K, e.size(1), e.size(2), e.size(3)});
  r = r.reshape({B, K, r.size(1), r.size(2), r.size(3)});
  return ablations.no_responsibility ? combine_uniform_stacked(e, 1) : combine_stacked(e, r, 1);
}

torch::Tensor synthesize(CainModel& model, const std::vector<torch::Tensor>& source_frames,
                         const std::vector<torch::Tensor>& source_landmarks,
                         const torch::Tensor& target_landmark, const AblationFlags& ablations) {
  if (source_frames.empty() || source_frames.size() != source_landmarks.size())
    throw UsageError("synthesize: need the same positive number of frames and landmark images");
  torch::NoGradGuard no_grad;
  ModeGuard e_mode(*model.embedder);
  ModeGuard g_mode(*model.generator);
  const auto target_in = ablations.no_targeting ? torch::zeros_like(target_landmark) : target_landmark;
  std::vector<torch::Tensor> es, rs;
  for (std::size_t i = 0; i < source_frames.size(); ++i) {
    auto [e, r] = embed_single(source_frames[i], source_landmarks[i], target_in, model.embedder);
    es.push_back(e.values);
    rs.push_back(r.values);
  }
  const auto e_stack = torch::stack(es);
  const auto e_x = ablations.no_responsibility ? combine_uniform_stacked(e_stack, 0)
                                               : combine_stacked(e_stack, torch::stack(rs), 0);
  return generate(target_landmark, SpatialEmbedding{e_x}, model.generator);
}

torch::Tensor synthesize(CainModel& model, const SampledBatch& batch, const AblationFlags& ablations) {
  std::vector<torch::Tensor> frames, lms;
  for (const auto& [f, l] : batch.sources) {
    frames.push_back(f);
    lms.push_back(l);
  }
  return synthesize(model, frames, lms, batch.target_landmark, ablations);
}

}  // namespace cain
