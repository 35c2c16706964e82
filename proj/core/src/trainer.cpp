#include "cain/trainer.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "cain/checkpoint.hpp"
#include "cain/errors.hpp"
#include "cain/losses.hpp"
#include "cain/metrics.hpp"

namespace fs = std::filesystem;

namespace cain {

namespace {

constexpr std::uint64_t kValidationSeedOffset = 0x5EED0001;

torch::optim::AdamOptions adam(double lr, const TrainConfig& cfg) {
  return torch::optim::AdamOptions(lr).betas({cfg.beta1, cfg.beta2});
}

double value_of(const torch::Tensor& t) { return t.item<double>(); }

void require_finite(const LogRecord& r) {
  const std::pair<const char*, std::optional<double>> parts[] = {
      {"L_Id", r.L_Id},     {"L_Pose", r.L_Pose}, {"L_Adv", r.L_Adv}, {"L_FM_I", r.L_FM_I},
      {"L_FM_P", r.L_FM_P}, {"L_VGG", r.L_VGG},   {"L_G", r.L_G}};
  bool ok = true;
  for (const auto& [name, v] : parts)
    if (v && !std::isfinite(*v)) ok = false;
  if (ok) return;
  std::ostringstream os;
  os << "non-finite loss at step " << r.step << " (epoch " << r.epoch << ", " << r.update
     << " update):";
  for (const auto& [name, v] : parts)
    if (v) os << ' ' << name << '=' << *v;
  throw NumericError(os.str());
}

std::vector<std::vector<int>> epoch_batches(int n_train, int batch_size) {
  std::vector<std::vector<int>> out;
  for (int start = 0; start < n_train; start += batch_size) {
    std::vector<int> ids;
    for (int i = start; i < std::min(n_train, start + batch_size); ++i) ids.push_back(i);
    out.push_back(std::move(ids));
  }
  return out;
}

void append_line(const std::string& path, const std::string& line) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to " + path);
  out << line << '\n';
}

// Freezes the discriminators for the generator update; restores them on scope exit.
struct FrozenParameters {
  explicit FrozenParameters(std::vector<torch::Tensor> params) : params(std::move(params)) {
    for (auto& p : this->params) p.set_requires_grad(false);
  }
  ~FrozenParameters() {
    for (auto& p : params) p.set_requires_grad(true);
  }
  std::vector<torch::Tensor> params;
};

std::string checkpoint_name(int epoch) {
  std::ostringstream os;
  os << "epoch_" << std::setw(4) << std::setfill('0') << epoch << ".ckpt";
  return os.str();
}

}  // namespace

std::string LogRecord::to_json() const {
  nlohmann::json j;
  j["step"] = step;
  j["epoch"] = epoch;
  j["update"] = std::string(1, update);
  auto put = [&](const char* key, const std::optional<double>& v) {
    j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  put("L_Id", L_Id);
  put("L_Pose", L_Pose);
  put("L_Adv", L_Adv);
  put("L_FM_I", L_FM_I);
  put("L_FM_P", L_FM_P);
  put("L_VGG", L_VGG);
  put("L_G", L_G);
  j["lambda_I"] = lambda_I;
  return j.dump();
}

TrainState::TrainState(const TrainConfig& c)
    : cfg(c), model(make_model(c.model, c.seed)), rng(c.seed) {
  opt_g = std::make_unique<torch::optim::Adam>(model.generator_parameters(), adam(cfg.lr_G, cfg));
  opt_d = std::make_unique<torch::optim::Adam>(model.discriminator_parameters(), adam(cfg.lr_D, cfg));
  backbone = std::make_unique<RandomConvBackbone>(cfg.model.backbone_seed);
}

double lambda_identity(int epoch, const LossWeights& w) {
  const int e = std::clamp(epoch, 0, w.ramp_epochs);
  return w.lambda_I_max * (0.1 + 0.9 * static_cast<double>(e) / w.ramp_epochs);
}

double effective_lambda_identity(int epoch, const TrainConfig& cfg) {
  return cfg.ablations.no_importance ? cfg.weights.lambda_P : lambda_identity(epoch, cfg.weights);
}

StepLog train_step(TrainState& state, const std::vector<SampledBatch>& samples) {
  const TrainConfig& cfg = state.cfg;
  CainModel& m = state.model;
  const StackedBatch b = stack_batches(samples);
  const double lambda_I = effective_lambda_identity(state.epoch, cfg);
  const double lambda_P = cfg.weights.lambda_P;
  StepLog log;
  m.train();

  for (int rep = 0; rep < 2; ++rep) {
    torch::Tensor fake;
    {
      // Eval mode keeps the spectral-norm power iteration of G frozen during D updates.
      torch::NoGradGuard no_grad;
      m.embedder->eval();
      m.generator->eval();
      const auto e_x = fuse_identity(m, b.source_frames, b.source_landmarks, b.target_landmark,
                                     cfg.ablations);
      fake = m.generator->forward(b.target_landmark, e_x);
      m.embedder->train();
      m.generator->train();
    }
    const auto real_I = m.disc_identity->forward(b.target_truth, b.identity_frame);
    const auto fake_I = m.disc_identity->forward(fake, b.identity_frame);
    const auto real_P = m.disc_pose->forward(b.target_truth, b.target_landmark);
    const auto fake_P = m.disc_pose->forward(fake, b.target_landmark);
    const auto loss_id = identity_discriminator_loss(real_I, fake_I);
    const auto loss_pose = pose_discriminator_loss(real_P, fake_P);

    LogRecord r;
    r.step = state.step + 1;
    r.epoch = state.epoch;
    r.update = 'D';
    r.L_Id = value_of(loss_id);
    r.L_Pose = value_of(loss_pose);
    r.lambda_I = lambda_I;
    require_finite(r);

    state.opt_d->zero_grad();
    (loss_id + loss_pose).backward();
    state.opt_d->step();
    ++state.d_updates;
    ++state.step;
    log.records.push_back(r);
    if (state.on_update) state.on_update(r);
  }

  FrozenParameters frozen(m.discriminator_parameters());
  const auto e_x = fuse_identity(m, b.source_frames, b.source_landmarks, b.target_landmark,
                                 cfg.ablations);
  const auto fake = m.generator->forward(b.target_landmark, e_x);
  const auto fake_I = m.disc_identity->forward(fake, b.identity_frame);
  const auto fake_P = m.disc_pose->forward(fake, b.target_landmark);
  DiscriminatorOutput real_I, real_P;
  {
    torch::NoGradGuard no_grad;
    real_I = m.disc_identity->forward(b.target_truth, b.identity_frame);
    real_P = m.disc_pose->forward(b.target_truth, b.target_landmark);
  }
  const auto adv = generator_adversarial_loss(fake_I, fake_P, lambda_I, lambda_P);
  const auto fm_I = feature_matching_loss(real_I, fake_I);
  const auto fm_P = feature_matching_loss(real_P, fake_P);
  const auto vgg = perceptual_loss(b.target_truth, fake, *state.backbone);
  const auto total = total_generator_loss(adv, fm_I, fm_P, vgg, cfg.weights, lambda_I);

  LogRecord r;
  r.step = state.step + 1;
  r.epoch = state.epoch;
  r.update = 'G';
  r.L_Adv = value_of(adv);
  r.L_FM_I = value_of(fm_I);
  r.L_FM_P = value_of(fm_P);
  r.L_VGG = value_of(vgg);
  r.L_G = value_of(total);
  r.lambda_I = lambda_I;
  require_finite(r);

  state.opt_g->zero_grad();
  total.backward();
  state.opt_g->step();
  ++state.g_updates;
  ++state.step;
  log.records.push_back(r);
  if (state.on_update) state.on_update(r);
  return log;
}

StepLog train_step(TrainState& state, const SampledBatch& batch) {
  return train_step(state, std::vector<SampledBatch>{batch});
}

ValidationMetrics validate_model(CainModel& model, const TrainConfig& cfg,
                                 const std::vector<IdentitySequence>& sequences) {
  ValidationMetrics out;
  std::mt19937_64 rng(cfg.seed + kValidationSeedOffset);
  for (const auto& seq : sequences) {
    const int K = std::min<int>(cfg.K, static_cast<int>(seq.size()) - 1);
    if (K < 1) continue;
    const auto batch = sample_frames(seq, K, rng);
    const auto fake = synthesize(model, batch, cfg.ablations);
    out.l1 += (fake - batch.target_truth).abs().mean().item<double>();
    out.ssim += ssim(fake, batch.target_truth);
    ++out.samples;
  }
  if (out.samples > 0) {
    out.l1 /= out.samples;
    out.ssim /= out.samples;
  }
  return out;
}

void configure_determinism(bool deterministic) {
  if (deterministic || deterministic_from_env()) {
    at::set_num_threads(1);
    at::globalContext().setDeterministicAlgorithms(true, false);
  }
}

bool deterministic_from_env() {
  const char* v = std::getenv("CAIN_DETERMINISTIC");
  return v && std::string(v) == "1";
}

void continue_training(TrainState& state, const std::vector<IdentitySequence>& data,
                       const TrainOptions& options) {
  const TrainConfig& cfg = state.cfg;
  if (data.empty()) throw UsageError("train: dataset is empty");
  configure_determinism(cfg.deterministic);
  auto [train_set, val_set] = split_dataset(data, cfg.val_fraction);
  if (train_set.empty()) throw UsageError("train: no training identities after the validation split");
  for (const auto& seq : train_set)
    if (static_cast<int>(seq.size()) < cfg.K + 1)
      throw DataError("identity " + seq.identity_id + " has " + std::to_string(seq.size()) +
                      " frames; need >= K+1 = " + std::to_string(cfg.K + 1));

  const bool write = !options.out_dir.empty();
  std::string log_path, val_path;
  if (write) {
    fs::create_directories(fs::path(options.out_dir) / "checkpoints");
    to_key_values(cfg).save((fs::path(options.out_dir) / "resolved_config.cfg").string());
    log_path = (fs::path(options.out_dir) / "train_log.jsonl").string();
    val_path = (fs::path(options.out_dir) / "val_log.jsonl").string();
  }

  const auto batches = epoch_batches(static_cast<int>(train_set.size()), cfg.batch_size);
  bool stop = false;
  while (!stop && state.epoch < cfg.epochs) {
    while (state.batch_in_epoch < static_cast<int>(batches.size())) {
      if (cfg.max_steps > 0 && state.step >= cfg.max_steps) {
        stop = true;
        break;
      }
      std::vector<SampledBatch> samples;
      for (int id : batches[state.batch_in_epoch])
        samples.push_back(sample_frames(train_set[id], cfg.K, state.rng));
      const auto log = train_step(state, samples);
      for (const auto& r : log.records) {
        if (write) append_line(log_path, r.to_json());
        if (options.on_record) options.on_record(r);
      }
      ++state.batch_in_epoch;
    }
    if (stop) break;
    state.batch_in_epoch = 0;
    ++state.epoch;

    if (cfg.validate_every > 0 && !val_set.empty() && state.epoch % cfg.validate_every == 0) {
      const auto v = validate_model(state.model, cfg, val_set);
      if (write) {
        nlohmann::json j{{"epoch", state.epoch}, {"step", state.step}, {"val_l1", v.l1},
                         {"val_ssim", v.ssim}, {"samples", v.samples}};
        append_line(val_path, j.dump());
      }
      if (options.on_validation) options.on_validation(state.epoch, v);
      if (v.l1 < state.best_val_l1) {
        state.best_val_l1 = v.l1;
        state.stale_validations = 0;
      } else if (++state.stale_validations >= cfg.early_stop_patience && cfg.early_stop_patience > 0) {
        stop = true;
      }
    }
    if (write && cfg.checkpoint_every > 0 && state.epoch % cfg.checkpoint_every == 0)
      save_checkpoint(state, (fs::path(options.out_dir) / "checkpoints" / checkpoint_name(state.epoch)).string());
  }
  if (write) save_checkpoint(state, (fs::path(options.out_dir) / "final.ckpt").string());
}

std::unique_ptr<TrainState> train(const TrainConfig& cfg, const std::vector<IdentitySequence>& data,
                                  const TrainOptions& options) {
  validate(cfg);
  configure_determinism(cfg.deterministic);
  std::unique_ptr<TrainState> state;
  if (options.resume_from) {
    state = load_checkpoint(*options.resume_from, cfg);
    state->cfg = cfg;
  } else {
    state = std::make_unique<TrainState>(cfg);
  }
  continue_training(*state, data, options);
  return state;
}

}  // namespace cain
