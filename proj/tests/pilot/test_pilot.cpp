#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <sstream>

#include "cain/commands.hpp"
#include "cain/image_io.hpp"
#include "cain/landmarks.hpp"
#include "cain/metrics.hpp"
#include "cain/model.hpp"
#include "cain/trainer.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace cain;

namespace {

const std::string kPilotConfig = std::string(CAIN_SOURCE_DIR) + "/configs/pilot.cfg";

int run_cli(const std::vector<std::string>& args) {
  std::ostringstream log;
  const int code = cli::run(args, log, log);
  if (code != 0) MESSAGE(log.str());
  return code;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double landmark_distance(const LandmarkSet& a, const LandmarkSet& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d += std::hypot(a.points[i].first - b.points[i].first, a.points[i].second - b.points[i].second);
  return d / static_cast<double>(a.size());
}

}  // namespace

TEST_SUITE("overfit") {
  TEST_CASE("pixel L1 on training targets halves within 300 steps") {
    torch::set_num_threads(1);
    TrainConfig cfg = load_train_config(kPilotConfig);
    cfg.max_steps = 300;
    cfg.checkpoint_every = 0;
    cfg.val_fraction = 0;
    const auto data = testing::tiny_data(2, 12, 64);

    std::mt19937_64 rng(77);
    std::vector<SampledBatch> probes;
    for (const auto& seq : data)
      for (int i = 0; i < 4; ++i) probes.push_back(sample_frames(seq, cfg.K, rng));

    TrainState s(cfg);
    std::vector<double> early, late;
    s.on_update = [&](const LogRecord& r) {
      const bool is_early = r.step >= 6 && r.step <= 15;
      const bool is_late = r.step > cfg.max_steps - 10;
      if (r.update != 'G' || !(is_early || is_late)) return;
      torch::NoGradGuard no_grad;
      s.model.train(false);
      double l1 = 0;
      for (const auto& b : probes) l1 += (synthesize(s.model, b, cfg.ablations) - b.target_truth).abs().mean().item<double>();
      s.model.train(true);
      (is_early ? early : late).push_back(l1 / static_cast<double>(probes.size()));
    };
    continue_training(s, data);
    REQUIRE(!early.empty());
    REQUIRE(!late.empty());
    MESSAGE("pixel L1 around step 10: " << mean(early) << ", at step " << s.step << ": " << mean(late));
    CHECK(mean(late) <= 0.5 * mean(early));
  }
}

TEST_SUITE("pilot") {
  TEST_CASE("pilot config trains 300 steps in under 30 minutes and follows target poses") {
    torch::set_num_threads(1);
    testing::TempDir dir("pilot");
    REQUIRE(run_cli({"make-data", "--out", dir / "data", "--identities", "4", "--frames", "12", "--resolution", "64",
                 "--seed", "0"}) == 0);
    auto kv = KeyValueConfig::load(kPilotConfig);
    kv.set("max_steps", "300");
    kv.set("checkpoint_every", "0");
    kv.save(dir / "pilot300.cfg");

    const auto start = std::chrono::steady_clock::now();
    REQUIRE(run_cli({"train", "--config", dir / "pilot300.cfg", "--data", dir / "data", "--out", dir / "run"}) == 0);
    const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60;
    MESSAGE("300 pilot steps took " << minutes << " min");
    CHECK(minutes < 30);

    fs::path identity;
    for (const auto& e : fs::directory_iterator(dir.path() / "data"))
      if (e.is_directory() && (identity.empty() || e.path() < identity)) identity = e.path();
    REQUIRE(!identity.empty());
    const auto source_lm = read_landmarks_json((identity / "0.landmarks.json").string());
    int far = 1;
    double far_distance = -1;
    for (int i = 1; i < 12; ++i) {
      const double d = landmark_distance(source_lm, read_landmarks_json((identity / (std::to_string(i) + ".landmarks.json")).string()));
      if (d > far_distance) {
        far_distance = d;
        far = i;
      }
    }
    const auto source = (identity / "0.png").string();
    const auto ckpt = dir / "run/final.ckpt";
    REQUIRE(run_cli({"generate", "--checkpoint", ckpt, "--sources", source, "--target-landmarks",
                 (identity / "0.landmarks.json").string(), "--out", dir / "same.png"}) == 0);
    REQUIRE(run_cli({"generate", "--checkpoint", ckpt, "--sources", source, "--target-landmarks",
                 (identity / (std::to_string(far) + ".landmarks.json")).string(), "--out", dir / "far.png"}) == 0);
    const auto src = read_png(source);
    const double same = ssim(read_png(dir / "same.png"), src);
    const double distant = ssim(read_png(dir / "far.png"), src);
    MESSAGE("SSIM vs source: same pose " << same << ", frame " << far << " (mean landmark offset " << far_distance << ") " << distant);
    CHECK(same > distant);
  }
}
