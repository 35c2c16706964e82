#include "cain/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "cain/checkpoint.hpp"
#include "cain/config.hpp"
#include "cain/dataset.hpp"
#include "cain/errors.hpp"
#include "cain/evaluate.hpp"
#include "cain/face_net.hpp"
#include "cain/image_io.hpp"
#include "cain/landmarks.hpp"
#include "cain/model.hpp"
#include "cain/trainer.hpp"

namespace fs = std::filesystem;

namespace cain::cli {

namespace {

constexpr int kMaxSources = 8;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create directory " + dir.string() + (ec ? ": " + ec.message() : ""));
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::string join_ints(const std::vector<int>& items) {
  std::vector<std::string> s;
  for (int v : items) s.push_back(std::to_string(v));
  return join(s, ",");
}

TrainConfig load_config_for_run(const std::string& path) {
  TrainConfig cfg = load_train_config(path);
  if (deterministic_from_env()) cfg.deterministic = true;
  return cfg;
}

std::vector<IdentitySequence> load_data_for(const std::string& root, int resolution) {
  if (!fs::is_directory(root)) throw DataError("dataset directory " + root + " does not exist");
  auto data = load_dataset(root);
  if (data.empty()) throw DataError("dataset " + root + " contains no identities");
  for (const auto& seq : data)
    if (seq.resolution() != resolution)
      throw DataError("identity " + seq.identity_id + " has resolution " + std::to_string(seq.resolution()) +
                      " but the config requests " + std::to_string(resolution));
  return data;
}

TrainOptions progress_options(const std::string& out, std::ostream& log) {
  TrainOptions o;
  o.out_dir = out;
  o.on_record = [&log](const LogRecord& r) {
    if (r.update == 'G' && r.step % 60 == 0)
      log << "step " << r.step << " epoch " << r.epoch << " L_G " << r.L_G.value_or(0.0) << "\n";
  };
  o.on_validation = [&log](int epoch, const ValidationMetrics& v) {
    log << "validation epoch " << epoch << " l1 " << v.l1 << " ssim " << v.ssim << "\n";
  };
  return o;
}

TrainedFaceEmbedder face_net_for(const std::optional<std::string>& path, int resolution,
                                 const fs::path& out_dir, std::ostream& log) {
  if (path) return TrainedFaceEmbedder::load(*path);
  FaceNetOptions o;
  o.resolution = resolution;
  log << "training CSIM face network (" << o.steps << " steps)\n";
  auto net = train_face_embedder(o);
  net.save((out_dir / "face_net.pt").string());
  return net;
}

/// Evaluation identities: the held-out split when there is one, otherwise every identity.
std::vector<IdentitySequence> evaluation_identities(const std::vector<IdentitySequence>& data,
                                                    const TrainConfig& cfg, std::ostream& log) {
  auto [train_set, val_set] = split_dataset(data, cfg.val_fraction);
  if (!val_set.empty()) return val_set;
  log << "note: no held-out identities; evaluating on the training identities\n";
  return data;
}

std::vector<torch::Tensor> image_with_landmarks(const std::string& png_path, int* resolution) {
  auto frame = read_png(png_path);
  fs::path lm_path = fs::path(png_path).replace_extension(".landmarks.json");
  if (!fs::exists(lm_path)) throw DataError("missing landmark file " + lm_path.string() + " for source " + png_path);
  const int res = static_cast<int>(frame.size(1));
  if (frame.size(1) != frame.size(2)) throw ShapeError("source " + png_path + " is not square: " + shape_string(frame));
  if (*resolution == 0) *resolution = res;
  if (res != *resolution)
    throw ShapeError("source " + png_path + " has resolution " + std::to_string(res) + " but earlier sources have " +
                     std::to_string(*resolution));
  return {frame, rasterize_landmarks(read_landmarks_json(lm_path.string()), res)};
}

torch::Tensor target_landmark_image(const std::string& path, int resolution) {
  if (fs::path(path).extension() == ".png") {
    auto img = read_png(path);
    if (img.size(1) != resolution || img.size(2) != resolution)
      throw ShapeError("target landmark image " + shape_string(img) + " does not match source resolution " +
                       std::to_string(resolution));
    return img;
  }
  return rasterize_landmarks(read_landmarks_json(path), resolution);
}

}  // namespace

void make_data(const MakeDataArgs& a, std::ostream& log) {
  if (a.identities < 1) throw UsageError("--identities must be >= 1");
  if (a.frames < 2)
    throw UsageError("--frames " + std::to_string(a.frames) +
                     " is too few: sampling K sources plus a target needs >= K+1 frames per identity (at least 2)");
  bool valid_res = false;
  for (int r : kSyntheticResolutions) valid_res = valid_res || r == a.resolution;
  if (!valid_res) throw UsageError("--resolution must be one of 32, 64, 128");

  ensure_dir(a.out);
  std::mt19937_64 rng(a.seed);
  std::vector<IdentitySequence> data;
  std::vector<std::string> seeds;
  for (int i = 0; i < a.identities; ++i) {
    const std::uint64_t s = rng() >> 1;
    seeds.push_back(std::to_string(s));
    data.push_back(generate_synthetic_identity(s, a.frames, a.resolution));
  }
  write_dataset(a.out, data);

  KeyValueConfig snapshot;
  snapshot.set("command", "make-data");
  snapshot.set("identities", std::to_string(a.identities));
  snapshot.set("frames", std::to_string(a.frames));
  snapshot.set("resolution", std::to_string(a.resolution));
  snapshot.set("seed", std::to_string(a.seed));
  snapshot.set("identity_seeds", join(seeds, ","));
  snapshot.save((fs::path(a.out) / "resolved_config.cfg").string());
  log << "wrote " << a.identities << " identities x " << a.frames << " frames to " << a.out << "\n";
}

void train(const TrainArgs& a, std::ostream& log) {
  const TrainConfig cfg = load_config_for_run(a.config);
  const auto data = load_data_for(a.data, cfg.resolution);
  ensure_dir(a.out);
  auto options = progress_options(a.out, log);
  options.resume_from = a.resume;
  auto state = cain::train(cfg, data, options);
  log << "finished at epoch " << state->epoch << ", " << state->step << " optimizer updates\n";
}

void generate(const GenerateArgs& a, std::ostream& log) {
  if (a.sources.empty() || static_cast<int>(a.sources.size()) > kMaxSources)
    throw UsageError("--sources takes 1 to " + std::to_string(kMaxSources) + " images, got " +
                     std::to_string(a.sources.size()));
  auto state = load_checkpoint(a.checkpoint);
  int resolution = 0;
  std::vector<torch::Tensor> frames, lms;
  for (const auto& s : a.sources) {
    auto pair = image_with_landmarks(s, &resolution);
    frames.push_back(pair[0]);
    lms.push_back(pair[1]);
  }
  if (resolution != state->cfg.resolution)
    throw ShapeError("sources have resolution " + std::to_string(resolution) + " but the checkpoint was trained at " +
                     std::to_string(state->cfg.resolution));
  const auto target = target_landmark_image(a.target_landmarks, resolution);
  const auto image = synthesize(state->model, frames, lms, target, state->cfg.ablations);

  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_png(a.out, image);

  KeyValueConfig snapshot;
  snapshot.set("command", "generate");
  snapshot.set("checkpoint", a.checkpoint);
  snapshot.set("sources", join(a.sources, ","));
  snapshot.set("target_landmarks", a.target_landmarks);
  snapshot.set("out", a.out);
  snapshot.save(a.out + ".resolved.cfg");
  log << "wrote " << a.out << "\n";
}

void evaluate(const EvaluateArgs& a, std::ostream& log) {
  if (a.K.empty()) throw UsageError("--K needs at least one value");
  for (int k : a.K)
    if (k < 1 || k > kMaxSources) throw UsageError("--K values must be in [1, 8]");
  auto state = load_checkpoint(a.checkpoint);
  const auto data = load_data_for(a.data, state->cfg.resolution);
  const fs::path out(a.out);
  ensure_dir(out);
  const auto face_net = face_net_for(a.face_net, state->cfg.resolution, out, log);
  const RandomConvBackbone fid_backbone(state->cfg.model.backbone_seed);
  const EvalResources res{face_net, face_net.id(), fid_backbone};

  const int sample_K = *std::max_element(a.K.begin(), a.K.end());
  for (int k : a.K) {
    EvalOptions o;
    o.K = k;
    o.sample_K = sample_K;
    o.samples_per_sequence = a.samples_per_sequence;
    o.seed = a.seed;
    std::vector<torch::Tensor> grid;
    const auto report = evaluate_model(state->model, state->cfg.ablations, data, o, res, &grid);
    std::ofstream(out / ("report_K" + std::to_string(k) + ".json")) << report.to_json() << "\n";
    write_png((out / ("grid_K" + std::to_string(k) + ".png")).string(), tile_images(grid, 3));
    log << "K=" << k << " ssim " << report.ssim << " csim " << report.csim << " fid " << report.fid << "\n";
  }

  KeyValueConfig snapshot;
  snapshot.set("command", "evaluate");
  snapshot.set("checkpoint", a.checkpoint);
  snapshot.set("data", a.data);
  snapshot.set("K", join_ints(a.K));
  snapshot.set("samples_per_sequence", std::to_string(a.samples_per_sequence));
  snapshot.set("seed", std::to_string(a.seed));
  snapshot.set("face_net", a.face_net.value_or((out / "face_net.pt").string()));
  snapshot.save((out / "resolved_config.cfg").string());
}

void ablate(const AblateArgs& a, std::ostream& log) {
  const AblationFlags flags = ablation_for_variant(a.variant);
  TrainConfig cfg = load_config_for_run(a.config);
  if (cfg.ablations.no_targeting || cfg.ablations.no_importance || cfg.ablations.no_responsibility)
    throw ConfigError("ablate: the base config must not set any ablation flag");
  const auto data = load_data_for(a.data, cfg.resolution);
  const fs::path out(a.out);
  ensure_dir(out);

  TrainConfig variant_cfg = cfg;
  variant_cfg.ablations = flags;
  log << "training variant " << a.variant << "\n";
  auto variant = cain::train(variant_cfg, data, progress_options((out / a.variant).string(), log));

  std::unique_ptr<TrainState> full;
  if (a.baseline) {
    full = load_checkpoint(*a.baseline, cfg);
  } else {
    log << "training full model\n";
    full = cain::train(cfg, data, progress_options((out / "full").string(), log));
  }

  const auto eval_set = evaluation_identities(data, cfg, log);
  const auto face_net = face_net_for(a.face_net, cfg.resolution, out, log);
  const RandomConvBackbone fid_backbone(cfg.model.backbone_seed);
  const EvalResources res{face_net, face_net.id(), fid_backbone};

  AblationTable table;
  table.variant = a.variant;
  for (int k : {1, 8}) {
    EvalOptions o;
    o.K = k;
    o.sample_K = 8;
    o.samples_per_sequence = a.samples_per_sequence;
    o.seed = cfg.seed;
    AblationRow vrow{a.variant, k, std::nullopt};
    if (variant_applicable(a.variant, k))
      vrow.report = evaluate_model(variant->model, variant_cfg.ablations, eval_set, o, res);
    table.rows.push_back(vrow);
    table.rows.push_back({"full", k, evaluate_model(full->model, cfg.ablations, eval_set, o, res)});
  }
  std::ofstream(out / "ablation_report.json") << table.to_json() << "\n";
  std::ofstream(out / "ablation_report.md") << table.to_markdown();

  KeyValueConfig snapshot = to_key_values(variant_cfg);
  snapshot.set("command", "ablate");
  snapshot.set("variant", a.variant);
  snapshot.set("data", a.data);
  if (a.baseline) snapshot.set("baseline", *a.baseline);
  snapshot.save((out / "resolved_config.cfg").string());
  log << table.to_markdown();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"CainGAN few-shot pose manipulation"};
  app.require_subcommand(1);

  MakeDataArgs md;
  auto* c_make = app.add_subcommand("make-data", "Generate a synthetic face dataset");
  c_make->add_option("--out", md.out, "Output directory")->required();
  c_make->add_option("--identities", md.identities, "Number of identities");
  c_make->add_option("--frames", md.frames, "Frames per identity");
  c_make->add_option("--resolution", md.resolution, "Image size (32, 64 or 128)");
  c_make->add_option("--seed", md.seed, "Random seed");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a model");
  c_train->add_option("--config", tr.config, "Config file")->required();
  c_train->add_option("--data", tr.data, "Dataset directory")->required();
  c_train->add_option("--out", tr.out, "Run directory")->required();
  c_train->add_option("--resume", tr.resume, "Checkpoint to resume from");

  GenerateArgs ge;
  auto* c_gen = app.add_subcommand("generate", "Synthesize one image");
  c_gen->add_option("--checkpoint", ge.checkpoint, "Checkpoint file")->required();
  c_gen->add_option("--sources", ge.sources, "Source frames (PNG with .landmarks.json alongside)")->required();
  c_gen->add_option("--target-landmarks", ge.target_landmarks, "Target landmarks (.json or rasterized .png)")
      ->required();
  c_gen->add_option("--out", ge.out, "Output PNG")->required();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Self-reenactment SSIM / CSIM / FID");
  c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  c_eval->add_option("--data", ev.data, "Dataset directory")->required();
  c_eval->add_option("--out", ev.out, "Report directory")->required();
  c_eval->add_option("--K", ev.K, "Source counts")->delimiter(',');
  c_eval->add_option("--samples", ev.samples_per_sequence, "Samples per identity");
  c_eval->add_option("--seed", ev.seed, "Sampling seed");
  c_eval->add_option("--face-net", ev.face_net, "Trained CSIM face network");

  AblateArgs ab;
  auto* c_abl = app.add_subcommand("ablate", "Train and compare an ablated variant");
  c_abl->add_option("--variant", ab.variant, "no_T, no_I or no_R")
      ->required()
      ->check(CLI::IsMember({"no_T", "no_I", "no_R"}));
  c_abl->add_option("--config", ab.config, "Config file")->required();
  c_abl->add_option("--data", ab.data, "Dataset directory")->required();
  c_abl->add_option("--out", ab.out, "Output directory")->required();
  c_abl->add_option("--baseline", ab.baseline, "Checkpoint of the full model");
  c_abl->add_option("--face-net", ab.face_net, "Trained CSIM face network");
  c_abl->add_option("--samples", ab.samples_per_sequence, "Samples per identity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kValidation;
  }

  try {
    if (deterministic_from_env()) configure_determinism(true);
    if (c_make->parsed()) make_data(md, out);
    else if (c_train->parsed()) train(tr, out);
    else if (c_gen->parsed()) generate(ge, out);
    else if (c_eval->parsed()) evaluate(ev, out);
    else if (c_abl->parsed()) ablate(ab, out);
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kValidation;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kValidation;
  } catch (const ShapeError& e) {
    err << "shape error: " << e.what() << "\n";
    return kValidation;
  } catch (const IncompatibleCheckpointError& e) {
    err << "incompatible checkpoint: " << e.what() << "\n";
    return kValidation;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericError& e) {
    err << "numeric abort: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"cain"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace cain::cli
