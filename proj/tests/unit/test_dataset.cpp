#include <doctest.h>

#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "cain/dataset.hpp"
#include "cain/errors.hpp"
#include "cain/landmarks.hpp"
#include "cain/synthetic_face.hpp"
#include "fixtures.hpp"

using namespace cain;

TEST_SUITE("dataset") {
  TEST_CASE("synthetic identities are deterministic per seed") {
    const auto a = generate_synthetic_identity(7, 2, 64);
    const auto b = generate_synthetic_identity(7, 2, 64);
    REQUIRE(a.size() == 2);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(torch::equal(a.frames[i], b.frames[i]));
      CHECK(a.landmarks[i] == b.landmarks[i]);
    }
    CHECK(a.frames[0].sizes() == torch::IntArrayRef{3, 64, 64});
    CHECK_FALSE(identity_from_seed(7) == identity_from_seed(8));
  }

  TEST_CASE("frames and landmark images lie in [-1, 1]") {
    const auto s = generate_synthetic_identity(3, 4, 32);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s.frames[i].min().item<float>() >= -1.0f);
      CHECK(s.frames[i].max().item<float>() <= 1.0f);
      const auto lm = rasterize_landmarks(s.landmarks[i], 32);
      CHECK(lm.min().item<float>() >= -1.0f);
      CHECK(lm.max().item<float>() <= 1.0f);
    }
  }

  TEST_CASE("mouth landmark centroid moves monotonically with mouth opening") {
    const auto id = identity_from_seed(11);
    const auto groups = default_landmark_groups();
    double previous_lower = -1;
    for (double open : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      FacePose pose;
      pose.mouth_open = open;
      const auto lm = face_landmarks(id, pose);
      // Centroid of the lower-lip points (below the mouth corners) in image space.
      double mid_v = 0;
      int n_mouth = 0;
      for (std::size_t i = 0; i < lm.size(); ++i)
        if (groups[i] == static_cast<int>(LandmarkGroup::Mouth)) {
          mid_v += lm.points[i].second;
          ++n_mouth;
        }
      mid_v /= n_mouth;
      double lower = 0;
      int n_lower = 0;
      for (std::size_t i = 0; i < lm.size(); ++i)
        if (groups[i] == static_cast<int>(LandmarkGroup::Mouth) && lm.points[i].second > mid_v) {
          lower += lm.points[i].second;
          ++n_lower;
        }
      lower /= n_lower;
      CHECK(lower > previous_lower);
      previous_lower = lower;
    }
  }

  TEST_CASE("rendered mouth interior grows with mouth opening") {
    const auto id = identity_from_seed(11);
    double previous = -1;
    for (double open : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      FacePose pose;
      pose.mouth_open = open;
      const auto img = render_face(id, pose, 128);
      const auto target = torch::tensor({static_cast<float>(id.mouth_interior[0] * 2 - 1),
                                         static_cast<float>(id.mouth_interior[1] * 2 - 1),
                                         static_cast<float>(id.mouth_interior[2] * 2 - 1)})
                              .view({3, 1, 1});
      const double area = ((img - target).abs().amax(0) < 1e-3).sum().item<double>();
      CHECK(area >= previous);
      previous = area;
    }
    CHECK(previous > 0);
  }

  TEST_CASE("sampling with two frames and K = 1") {
    const auto s = generate_synthetic_identity(1, 2, 32);
    std::mt19937_64 rng(0);
    for (int i = 0; i < 20; ++i) {
      const auto b = sample_frames(s, 1, rng);
      REQUIRE(b.K() == 1);
      CHECK(b.source_indices[0] != b.target_index);
      CHECK(b.source_indices[0] + b.target_index == 1);
    }
  }

  TEST_CASE("target frequency is uniform") {
    const auto s = generate_synthetic_identity(1, 10, 32);
    std::mt19937_64 rng(123);
    std::map<int, int> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) ++counts[sample_frames(s, 1, rng).target_index];
    for (int f = 0; f < 10; ++f) {
      const double freq = counts[f] / static_cast<double>(draws);
      CHECK(freq == doctest::Approx(0.1).epsilon(0.2));
      CHECK(std::abs(freq - 0.1) <= 0.02);
    }
  }

  TEST_CASE("K = 8 over 9 frames uses each frame once") {
    const auto s = generate_synthetic_identity(2, 9, 32);
    std::mt19937_64 rng(5);
    const auto b = sample_frames(s, 8, rng);
    std::set<int> used(b.source_indices.begin(), b.source_indices.end());
    used.insert(b.target_index);
    CHECK(used.size() == 9);
    CHECK(b.identity_frame_index == b.source_indices.front());
  }

  TEST_CASE("indices are distinct over many draws") {
    const auto s = generate_synthetic_identity(2, 12, 32);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 1000; ++i) {
      const auto b = sample_frames(s, 4, rng);
      std::set<int> used(b.source_indices.begin(), b.source_indices.end());
      used.insert(b.target_index);
      REQUIRE(used.size() == 5);
    }
  }

  TEST_CASE("too few frames names the identity") {
    const auto s = generate_synthetic_identity(4, 3, 32);
    std::mt19937_64 rng(0);
    try {
      sample_frames(s, 3, rng);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(s.identity_id) != std::string::npos);
    }
  }

  TEST_CASE("write and reload") {
    testing::TempDir dir("dataset");
    const auto data = testing::tiny_data(2, 3);
    write_dataset(dir.path().string(), data);
    const auto back = load_dataset(dir.path().string());
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].identity_id == data[i].identity_id);
      REQUIRE(back[i].size() == 3);
      // PNG storage quantizes to 8 bits.
      CHECK((back[i].frames[1] - data[i].frames[1]).abs().max().item<float>() <= 1.0f / 255.0f + 1e-6f);
      CHECK(back[i].landmarks[2].points.size() == data[i].landmarks[2].points.size());
    }
    std::filesystem::remove(dir.path() / data[0].identity_id / "1.landmarks.json");
    CHECK_THROWS_AS(load_dataset(dir.path().string()), DataError);
  }

  TEST_CASE("synthetic manifest") {
    const auto kv = KeyValueConfig::parse("seeds = 3,5-6\nn_frames = 4\nresolution = 32\n");
    const auto data = load_dataset("", kv);
    REQUIRE(data.size() == 3);
    CHECK(data[2].identity_id == "synth_6");
    CHECK(parse_seed_list("0,1,5-8").size() == 6);
  }

  TEST_CASE("validation split holds out the last identities") {
    const auto data = testing::tiny_data(10, 2);
    auto [train, val] = split_dataset(data, 0.2);
    CHECK(train.size() == 8);
    REQUIRE(val.size() == 2);
    CHECK(val[1].identity_id == data[9].identity_id);
    auto [train4, val4] = split_dataset(testing::tiny_data(4, 2), 0.1);
    CHECK(train4.size() == 4);
    CHECK(val4.empty());
  }
}

TEST_SUITE("landmarks") {
  TEST_CASE("rasterization is deterministic") {
    const auto lm = face_landmarks(identity_from_seed(3), FacePose{});
    CHECK(torch::equal(rasterize_landmarks(lm, 64), rasterize_landmarks(lm, 64)));
  }

  TEST_CASE("coincident points collapse to one pixel") {
    LandmarkSet lm;
    lm.points.assign(68, {0.5, 0.5});
    lm.groups = default_landmark_groups();
    const auto img = rasterize_landmarks(lm, 64);
    const auto lit = (img > -1.0f).any(0);
    CHECK(lit.sum().item<int64_t>() == 1);
    CHECK(lit[32][32].item<bool>());
  }

  TEST_CASE("mirrored landmarks give a mirrored raster within one pixel") {
    const auto lm = face_landmarks(identity_from_seed(5), pose_for_frame(identity_from_seed(5), 3));
    for (int res : {32, 64, 128}) {
      const auto a = rasterize_landmarks(lm, res);
      const auto b = rasterize_landmarks(mirror_horizontally(lm), res).flip({2});
      const auto lit_a = (a > -1.0f).any(0), lit_b = (b > -1.0f).any(0);
      // Every lit pixel of one raster has a lit pixel within one column in the other.
      auto near = [](const torch::Tensor& x) {
        return torch::max_pool2d(x.to(torch::kFloat32).unsqueeze(0), {1, 3}, {1, 1}, {0, 1}).squeeze(0) > 0;
      };
      CHECK((lit_a & ~near(lit_b)).sum().item<int64_t>() == 0);
      CHECK((lit_b & ~near(lit_a)).sum().item<int64_t>() == 0);
    }
  }

  TEST_CASE("points outside the unit square are rejected") {
    auto lm = face_landmarks(identity_from_seed(1), FacePose{});
    lm.points[10].first = 1.5;
    CHECK_THROWS_AS(check_landmarks(lm), DataError);
    CHECK(to_pixel(1.0, 64) == 63);
    CHECK(to_pixel(0.0, 64) == 0);
  }

  TEST_CASE("json round trip") {
    testing::TempDir dir("lm");
    const auto lm = face_landmarks(identity_from_seed(2), FacePose{});
    write_landmarks_json(dir / "a.json", lm);
    CHECK(read_landmarks_json(dir / "a.json") == lm);
  }
}
