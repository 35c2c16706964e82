#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "cain/backbone.hpp"
#include "cain/config.hpp"
#include "cain/dataset.hpp"
#include "cain/model.hpp"

namespace cain {

/// One optimizer update. Discriminator records leave the generator terms empty and vice versa.
struct LogRecord {
  std::int64_t step = 0;  // optimizer updates completed so far, this one included
  int epoch = 0;
  char update = 'D';  // 'D' or 'G'
  std::optional<double> L_Id, L_Pose, L_Adv, L_FM_I, L_FM_P, L_VGG, L_G;
  double lambda_I = 0.0;

  /// Single-line JSON object.
  std::string to_json() const;
  bool operator==(const LogRecord&) const = default;
};

/// Records of one train_step: two discriminator updates, then one generator update.
struct StepLog {
  std::vector<LogRecord> records;
};

struct ValidationMetrics {
  double l1 = 0.0;
  double ssim = 0.0;
  int samples = 0;
};

/// Everything needed to continue training bit-exactly.
struct TrainState {
  explicit TrainState(const TrainConfig& cfg);

  TrainConfig cfg;
  CainModel model;
  std::unique_ptr<torch::optim::Adam> opt_g;  // generator + embedder
  std::unique_ptr<torch::optim::Adam> opt_d;  // both discriminators
  std::unique_ptr<RandomConvBackbone> backbone;

  int epoch = 0;
  int batch_in_epoch = 0;
  std::int64_t step = 0;
  std::int64_t d_updates = 0;
  std::int64_t g_updates = 0;
  std::mt19937_64 rng;
  double best_val_l1 = std::numeric_limits<double>::infinity();
  int stale_validations = 0;

  /// Called after every optimizer update. Not serialized.
  std::function<void(const LogRecord&)> on_update;
};

/// lambda_I_max * (0.1 + 0.9 * min(epoch, ramp) / ramp).
double lambda_identity(int epoch, const LossWeights& w);

/// The identity weight actually used: the ramp, or lambda_P when no_importance is set.
double effective_lambda_identity(int epoch, const TrainConfig& cfg);

/// Two discriminator updates (each on a freshly generated image) then one generator+embedder
/// update. Throws NumericError with the loss components if any loss is non-finite.
StepLog train_step(TrainState& state, const std::vector<SampledBatch>& batch);
StepLog train_step(TrainState& state, const SampledBatch& batch);

/// Mean L1 and SSIM of generated vs ground-truth frames on a fixed set of samples.
ValidationMetrics validate_model(CainModel& model, const TrainConfig& cfg,
                                 const std::vector<IdentitySequence>& sequences);

struct TrainOptions {
  std::string out_dir;  // empty: no files are written
  std::optional<std::string> resume_from;
  std::function<void(const LogRecord&)> on_record;
  std::function<void(int epoch, const ValidationMetrics&)> on_validation;
};

/// Full training loop over epochs x training identities. The last val_fraction of the
/// identities is held out for validation.
std::unique_ptr<TrainState> train(const TrainConfig& cfg, const std::vector<IdentitySequence>& data,
                                  const TrainOptions& options = {});

/// Continues training from an existing state under `cfg`.
void continue_training(TrainState& state, const std::vector<IdentitySequence>& data,
                       const TrainOptions& options = {});

/// Sets single-threaded deterministic kernels when cfg.deterministic or CAIN_DETERMINISTIC=1.
void configure_determinism(bool deterministic);
bool deterministic_from_env();

}  // namespace cain
