#include "cain/evaluate.hpp"

#include <cstdio>
#include <random>

#include <json.hpp>

#include "cain/errors.hpp"

namespace cain {

namespace {

nlohmann::json report_object(const EvalReport& r) {
  return {{"K", r.K},
          {"ssim", r.ssim},
          {"csim", r.csim},
          {"fid", r.fid},
          {"n_sequences", r.n_sequences},
          {"n_samples", r.n_samples},
          {"degenerate_csim", r.degenerate_csim},
          {"backbone_id", r.backbone_id},
          {"face_net_id", r.face_net_id}};
}

std::string cell(double v, int precision) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

}  // namespace

std::string EvalReport::to_json() const { return report_object(*this).dump(2); }

EvalReport evaluate(const Synthesizer& synthesizer, const std::vector<IdentitySequence>& sequences,
                    const EvalOptions& o, const EvalResources& res, std::vector<torch::Tensor>* grid) {
  if (sequences.empty()) throw UsageError("evaluate: empty split");
  if (o.K < 1) throw UsageError("evaluate: K must be >= 1");
  const int sample_K = o.sample_K > 0 ? o.sample_K : o.K;
  if (sample_K < o.K) throw UsageError("evaluate: sample_K must be >= K");
  if (o.samples_per_sequence < 1) throw UsageError("evaluate: samples_per_sequence must be >= 1");

  EvalReport report;
  report.K = o.K;
  report.backbone_id = res.fid_backbone.id();
  report.face_net_id = res.face_net_id;
  FeatureStats real_stats(RandomConvBackbone::kFeatureDim), fake_stats(RandomConvBackbone::kFeatureDim);
  std::mt19937_64 rng(o.seed);

  for (const auto& seq : sequences) {
    for (int i = 0; i < o.samples_per_sequence; ++i) {
      SampledBatch batch = sample_frames(seq, sample_K, rng);
      batch.sources.resize(static_cast<std::size_t>(o.K));
      batch.source_indices.resize(static_cast<std::size_t>(o.K));
      const auto fake = synthesizer(batch).detach().to(torch::kFloat32);
      const auto& truth = batch.target_truth;
      report.ssim += ssim(fake, truth);
      const auto c = csim(fake, truth, res.face_net);
      report.csim += c.value;
      report.degenerate_csim += c.degenerate ? 1 : 0;
      {
        torch::NoGradGuard no_grad;
        real_stats.add_rows(res.fid_backbone.pooled_features(truth.unsqueeze(0)));
        fake_stats.add_rows(res.fid_backbone.pooled_features(fake.unsqueeze(0)));
      }
      if (grid && static_cast<int>(grid->size()) < 3 * o.grid_rows) {
        grid->push_back(batch.sources.front().first);
        grid->push_back(fake);
        grid->push_back(truth);
      }
      ++report.n_samples;
    }
    ++report.n_sequences;
  }
  report.ssim /= report.n_samples;
  report.csim /= report.n_samples;
  if (report.n_samples < 2) throw UsageError("evaluate: FID needs at least 2 samples");
  report.fid = fid(real_stats, fake_stats);
  return report;
}

EvalReport evaluate_model(CainModel& model, const AblationFlags& ablations,
                          const std::vector<IdentitySequence>& sequences, const EvalOptions& options,
                          const EvalResources& resources, std::vector<torch::Tensor>* grid) {
  return evaluate([&](const SampledBatch& b) { return synthesize(model, b, ablations); }, sequences,
                  options, resources, grid);
}

AblationFlags ablation_for_variant(const std::string& variant) {
  AblationFlags f;
  if (variant == "no_T")
    f.no_targeting = true;
  else if (variant == "no_I")
    f.no_importance = true;
  else if (variant == "no_R")
    f.no_responsibility = true;
  else
    throw UsageError("unknown ablation variant `" + variant + "` (expected no_T, no_I or no_R)");
  return f;
}

bool variant_applicable(const std::string& variant, int K) { return !(variant == "no_R" && K == 1); }

std::string AblationTable::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j{{"method", r.method}, {"K", r.K}};
    if (r.report) {
      j["ssim"] = r.report->ssim;
      j["csim"] = r.report->csim;
      j["fid"] = r.report->fid;
    } else {
      j["ssim"] = j["csim"] = j["fid"] = "N/A";
      j["note"] = "not applicable for K=1";
    }
    rows_json.push_back(j);
  }
  return nlohmann::json{{"variant", variant}, {"rows", rows_json}}.dump(2);
}

std::string AblationTable::to_markdown() const {
  std::string out = "| Method (K) | SSIM | CSIM | FID |\n|---|---|---|---|\n";
  for (const auto& r : rows) {
    out += "| " + r.method + " (" + std::to_string(r.K) + ") | ";
    if (r.report)
      out += cell(r.report->ssim, 4) + " | " + cell(r.report->csim, 4) + " | " + cell(r.report->fid, 3);
    else
      out += "N/A | N/A | N/A";
    out += " |\n";
  }
  return out;
}

}  // namespace cain
