#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cain {

/// Flat `key = value` configuration text. `#` starts a comment.
/// Keys keep the order in which they were first seen.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::string& path);

  bool contains(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  void set(const std::string& key, std::string value);
  std::vector<std::string> keys() const { return order_; }

  std::string to_text() const;
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

/// Weights of the generator/discriminator objectives and the identity ramp.
struct LossWeights {
  double lambda_I_max = 1.0;
  double lambda_P = 1.0;
  double lambda_FM = 10.0;
  double lambda_VGG = 10.0;
  int ramp_epochs = 10;
};

struct AblationFlags {
  bool no_targeting = false;     // embedder sees zeros in place of the target landmarks
  bool no_importance = false;    // lambda_I pinned to lambda_P, no ramp
  bool no_responsibility = false;  // uniform average instead of responsibility weighting
};

/// Network widths and depths.
struct ModelConfig {
  int embed_channels = 64;
  int gen_channels = 64;
  int gen_max_channels = 512;
  int gen_down = 4;
  int gen_same = 3;
  int disc_channels = 64;
  int disc_scales = 2;
  std::uint64_t backbone_seed = 1234;
};

struct TrainConfig {
  int K = 8;
  int epochs = 30;
  int batch_size = 4;
  double lr_G = 1e-4;
  double lr_D = 4e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  LossWeights weights;
  AblationFlags ablations;
  std::uint64_t seed = 0;
  int resolution = 64;
  int checkpoint_every = 1;

  ModelConfig model;
  /// Upper bound on optimizer updates (discriminator and generator updates both count); 0 = none.
  std::int64_t max_steps = 0;
  /// Epochs between validation passes; 0 disables validation.
  int validate_every = 1;
  /// Stop when validation L1 has not improved for this many validations; 0 disables.
  int early_stop_patience = 0;
  double val_fraction = 0.1;
  bool deterministic = true;
};

/// Required keys of a training config file.
const std::vector<std::string>& required_train_keys();

/// Parses and validates; every problem is reported in a single ConfigError.
TrainConfig train_config_from(const KeyValueConfig& kv);
TrainConfig load_train_config(const std::string& path);
KeyValueConfig to_key_values(const TrainConfig& cfg);

/// Every violated invariant, in field order.
std::vector<std::string> config_problems(const TrainConfig& cfg);

/// Throws ConfigError listing every violated invariant.
void validate(const TrainConfig& cfg);

/// 64-bit FNV-1a of the canonical config text, as 16 hex digits.
std::string config_hash(const TrainConfig& cfg);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace cain
