#include <doctest.h>

#include "cain/discriminator.hpp"
#include "fixtures.hpp"

using namespace cain;

TEST_SUITE("discriminator") {
  TEST_CASE("two scales with five taps each") {
    torch::manual_seed(0);
    MultiScaleDiscriminator d(6, 16, 2);
    const auto a = torch::rand({3, 64, 64}) * 2 - 1, b = torch::rand({3, 64, 64}) * 2 - 1;
    const auto out = discriminate_identity(a, b, d);
    REQUIRE(out.scales() == 2);
    CHECK(out.scores[0].sizes() == torch::IntArrayRef{1, 1, 11, 11});
    CHECK(out.scores[1].sizes() == torch::IntArrayRef{1, 1, 7, 7});
    int features = 0;
    for (const auto& f : out.features) features += static_cast<int>(f.size());
    CHECK(features == 2 * kDiscriminatorTaps);
    CHECK(torch::equal(out.features[0].back(), out.scores[0]));
  }

  TEST_CASE("argument order matters") {
    torch::manual_seed(1);
    MultiScaleDiscriminator d(6, 8, 2);
    const auto a = torch::rand({3, 32, 32}) * 2 - 1, b = torch::rand({3, 32, 32}) * 2 - 1;
    CHECK(!torch::equal(discriminate_identity(a, b, d).scores[0], discriminate_identity(b, a, d).scores[0]));
  }

  TEST_CASE("pose discriminator responds to landmarks") {
    torch::manual_seed(2);
    MultiScaleDiscriminator d(6, 8, 2);
    const auto seq = generate_synthetic_identity(3, 8, 32);
    const auto lm0 = rasterize_landmarks(seq.landmarks[0], 32);
    const auto lm7 = rasterize_landmarks(seq.landmarks[7], 32);
    const auto s0 = discriminate_pose(seq.frames[0], lm0, d).scores[0];
    const auto s7 = discriminate_pose(seq.frames[0], lm7, d).scores[0];
    CHECK((s0 - s7).abs().max().item<float>() > 0);
  }

  TEST_CASE("zero images give finite scores") {
    MultiScaleDiscriminator d(6, 8, 2);
    const auto out = discriminate_pose(torch::zeros({2, 3, 32, 32}), torch::zeros({2, 3, 32, 32}), d);
    for (const auto& s : out.scores) CHECK(torch::isfinite(s).all().item<bool>());
  }

  TEST_CASE("second scale runs on pooled input") {
    torch::manual_seed(3);
    MultiScaleDiscriminator d(6, 8, 2);
    const auto x = torch::rand({1, 6, 32, 32});
    const auto out = d->forward_concat(x);
    auto net = d->nets[1]->as<PatchDiscriminatorImpl>();
    const auto direct = net->forward(torch::avg_pool2d(x, 2)).back();
    CHECK(torch::equal(out.scores[1], direct));
  }

  TEST_CASE("discriminators share no parameters") {
    torch::manual_seed(4);
    MultiScaleDiscriminator di(6, 8, 2), dp(6, 8, 2);
    const auto x = torch::rand({1, 3, 32, 32}), y = torch::rand({1, 3, 32, 32});
    const auto before = dp->forward(x, y).scores[0].clone();
    torch::optim::SGD opt(di->parameters(), 0.1);
    di->forward(x, y).scores[0].mean().backward();
    opt.step();
    CHECK(torch::equal(dp->forward(x, y).scores[0], before));
  }
}
