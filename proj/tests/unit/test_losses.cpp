#include <doctest.h>

#include <random>

#include "cain/backbone.hpp"
#include "cain/losses.hpp"
#include "fixtures.hpp"

using namespace cain;

namespace {

DiscriminatorOutput scores(std::vector<double> means) {
  DiscriminatorOutput out;
  for (double m : means) {
    out.scores.push_back(torch::full({1, 1, 3, 3}, m, torch::kFloat64));
    out.features.push_back({});
  }
  return out;
}

DiscriminatorOutput pyramid(int S, int T, torch::Tensor (*make)(torch::IntArrayRef)) {
  DiscriminatorOutput out;
  for (int s = 0; s < S; ++s) {
    std::vector<torch::Tensor> f;
    for (int t = 0; t < T; ++t) f.push_back(make({1, 2 + t, 6 - s, 5}).to(torch::kFloat64));
    out.features.push_back(f);
    out.scores.push_back(f.back());
  }
  return out;
}

torch::Tensor randn_shape(torch::IntArrayRef s) { return torch::randn(s); }

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("adversarial term") {
    CHECK(generator_adversarial_loss(scores({0.5}), scores({0.25}), 1, 1).item<double>() ==
          doctest::Approx(-0.75).epsilon(1e-12));
    CHECK(generator_adversarial_loss(scores({0.7}), scores({0.4}), 0, 2).item<double>() ==
          doctest::Approx(-0.8).epsilon(1e-12));
    CHECK(generator_adversarial_loss(scores({0}), scores({0}), 1, 1).item<double>() == 0.0);
    CHECK(aggregate_score(scores({0.5, 0.25})).item<double>() == doctest::Approx(0.75));
  }

  TEST_CASE("hinge hand values") {
    CHECK(hinge_discriminator_loss(scores({2}), scores({-2})).item<double>() == 0.0);
    CHECK(hinge_discriminator_loss(scores({0.5}), scores({-0.5})).item<double>() == doctest::Approx(1.0));
    CHECK(hinge_discriminator_loss(scores({1}), scores({-1})).item<double>() == 0.0);
  }

  TEST_CASE("hinge matches the one-line oracle and is non-negative") {
    std::mt19937_64 rng(0);
    std::normal_distribution<double> n(0, 2);
    for (int i = 0; i < 1000; ++i) {
      const double r = n(rng), f = n(rng);
      const double v = identity_discriminator_loss(scores({r}), scores({f})).item<double>();
      REQUIRE(v >= 0);
      REQUIRE(std::abs(v - oracle::hinge(r, f)) < 1e-7);
    }
  }

  TEST_CASE("hinge subgradients") {
    for (auto [r, f] : {std::pair{0.3, -0.2}, {1.5, 0.4}, {-0.5, -1.7}, {2.0, -3.0}}) {
      auto real = scores({r}), fake = scores({f});
      real.scores[0].requires_grad_(true);
      fake.scores[0].requires_grad_(true);
      pose_discriminator_loss(real, fake).backward();
      const double gr = real.scores[0].grad().sum().item<double>();
      const double gf = fake.scores[0].grad().sum().item<double>();
      CHECK((gr == doctest::Approx(0.0) || gr == doctest::Approx(-1.0)));
      CHECK((gf == doctest::Approx(0.0) || gf == doctest::Approx(1.0)));
    }
  }

  TEST_CASE("feature matching hand values") {
    DiscriminatorOutput real, fake;
    real.features = {{torch::tensor({1.0, 2.0})}};
    fake.features = {{torch::tensor({1.0, 4.0})}};
    CHECK(feature_matching_loss(real, fake).item<double>() == doctest::Approx(1.0));
    CHECK(feature_matching_loss(real, real).item<double>() == 0.0);
  }

  TEST_CASE("feature matching matches the naive loop and ignores duplication") {
    torch::manual_seed(0);
    const auto real = pyramid(2, 5, randn_shape), fake = pyramid(2, 5, randn_shape);
    const double v = feature_matching_loss(real, fake).item<double>();
    CHECK(v >= 0);
    CHECK(std::abs(v - oracle::feature_matching(real.features, fake.features)) < 1e-6);
    auto dup = [](DiscriminatorOutput d) {
      for (auto& scale : d.features)
        for (auto& t : scale) t = torch::cat({t.flatten(), t.flatten()});
      return d;
    };
    CHECK(std::abs(feature_matching_loss(dup(real), dup(fake)).item<double>() - v) < 1e-6);
  }

  TEST_CASE("feature matching does not backpropagate into real features") {
    auto real = pyramid(1, 2, randn_shape), fake = pyramid(1, 2, randn_shape);
    for (auto& t : real.features[0]) t.requires_grad_(true);
    for (auto& t : fake.features[0]) t.requires_grad_(true);
    feature_matching_loss(real, fake).backward();
    CHECK_FALSE(real.features[0][0].grad().defined());
    CHECK(fake.features[0][0].grad().defined());
  }

  TEST_CASE("perceptual loss") {
    torch::manual_seed(1);
    RandomConvBackbone vgg(1234);
    const auto a = torch::rand({2, 3, 32, 32}) * 2 - 1, b = torch::rand({2, 3, 32, 32}) * 2 - 1;
    CHECK(perceptual_loss(a, a, vgg).item<double>() == 0.0);
    CHECK(std::abs(perceptual_loss(a, b, vgg).item<double>() - perceptual_loss(b, a, vgg).item<double>()) < 1e-6);
    CHECK(perceptual_loss(a, b, vgg).item<double>() > 0);
    IdentityBackbone pixels;
    CHECK(std::abs(perceptual_loss(a, b, pixels).item<double>() - (a - b).abs().mean().item<double>()) < 1e-6);
  }

  TEST_CASE("total generator objective") {
    LossWeights w;
    CHECK(total_generator_loss(-1.0, 0.5, 0.5, 2.0, w, 1.0) == doctest::Approx(29.0));
    LossWeights zero{0, 0, 0, 0, 10};
    CHECK(total_generator_loss(-1.5, 0.5, 0.5, 2.0, zero, 0.0) == doctest::Approx(-1.5));
    const auto vgg = torch::tensor(2.0, torch::TensorOptions().dtype(torch::kFloat64).requires_grad(true));
    const auto one = torch::tensor(0.5, torch::kFloat64);
    total_generator_loss(one, one, one, vgg, w, 1.0).backward();
    CHECK(vgg.grad().item<double>() == doctest::Approx(w.lambda_VGG));
  }
}
