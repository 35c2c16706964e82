#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "cain/backbone.hpp"
#include "cain/dataset.hpp"
#include "cain/metrics.hpp"
#include "cain/model.hpp"

namespace cain {

struct EvalOptions {
  int K = 1;
  /// Frames drawn per sample; sources are the first K of them. Evaluations sharing
  /// sample_K and seed therefore share targets. 0 means K.
  int sample_K = 0;
  int samples_per_sequence = 4;
  std::uint64_t seed = 0;
  int grid_rows = 8;
};

struct EvalReport {
  int K = 0;
  double ssim = 0.0;
  double csim = 0.0;
  double fid = 0.0;
  int n_sequences = 0;
  int n_samples = 0;
  int degenerate_csim = 0;
  std::string backbone_id;
  std::string face_net_id;

  std::string to_json() const;
};

/// Produces an image for a sampled batch (sources + target landmarks).
using Synthesizer = std::function<torch::Tensor(const SampledBatch&)>;

struct EvalResources {
  const FaceEmbedder& face_net;
  std::string face_net_id;
  const RandomConvBackbone& fid_backbone;
};

/// Self-reenactment evaluation. Fills `grid` with source | generated | ground truth rows.
EvalReport evaluate(const Synthesizer& synthesizer, const std::vector<IdentitySequence>& sequences,
                    const EvalOptions& options, const EvalResources& resources,
                    std::vector<torch::Tensor>* grid = nullptr);

EvalReport evaluate_model(CainModel& model, const AblationFlags& ablations,
                          const std::vector<IdentitySequence>& sequences, const EvalOptions& options,
                          const EvalResources& resources, std::vector<torch::Tensor>* grid = nullptr);

/// Table of {variant, full} x K for an ablation run; no_responsibility at K = 1 is N/A.
struct AblationRow {
  std::string method;
  int K = 0;
  std::optional<EvalReport> report;  // empty: not applicable
};

struct AblationTable {
  std::string variant;
  std::vector<AblationRow> rows;

  std::string to_json() const;
  std::string to_markdown() const;
};

/// Short variant names: no_T, no_I, no_R.
AblationFlags ablation_for_variant(const std::string& variant);
bool variant_applicable(const std::string& variant, int K);

}  // namespace cain
