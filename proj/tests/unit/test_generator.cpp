#include <doctest.h>

#include "cain/errors.hpp"
#include "cain/generator.hpp"
#include "cain/layers.hpp"
#include "cain/model.hpp"
#include "fixtures.hpp"

using namespace cain;

TEST_SUITE("generator") {
  TEST_CASE("output shape and range") {
    torch::manual_seed(0);
    Generator G(GeneratorOptions{16, 64, 4, 2, 8});
    for (double scale : {1.0, 100.0}) {
      const auto out = G->forward(torch::randn({2, 3, 64, 64}) * scale, torch::randn({2, 8, 16, 16}) * scale);
      CHECK(out.sizes() == torch::IntArrayRef{2, 3, 64, 64});
      CHECK(out.abs().max().item<float>() <= 1.0f);
      CHECK(torch::isfinite(out).all().item<bool>());
    }
  }

  TEST_CASE("generate checks shapes") {
    Generator G(GeneratorOptions{8, 16, 3, 1, 4});
    const auto y = generate(torch::zeros({3, 32, 32}), {torch::zeros({4, 8, 8})}, G);
    CHECK(y.sizes() == torch::IntArrayRef{3, 32, 32});
    CHECK_THROWS_AS(generate(torch::zeros({3, 32, 32}), {torch::zeros({5, 8, 8})}, G), ShapeError);
    CHECK_THROWS_AS(generate(torch::zeros({32, 32}), {torch::zeros({4, 8, 8})}, G), ShapeError);
  }

  TEST_CASE("different identities give different outputs") {
    torch::manual_seed(1);
    Generator G(GeneratorOptions{8, 16, 3, 1, 4});
    G->eval();
    const auto lm = torch::rand({3, 32, 32}) * 2 - 1;
    const auto a = generate(lm, {torch::randn({4, 8, 8})}, G);
    const auto b = generate(lm, {torch::randn({4, 8, 8})}, G);
    CHECK((a - b).abs().max().item<float>() > 0);
  }

  TEST_CASE("every parameter receives gradient") {
    torch::manual_seed(2);
    Generator G(GeneratorOptions{8, 16, 3, 1, 4});
    const auto out = G->forward(torch::rand({2, 3, 32, 32}) * 2 - 1, torch::randn({2, 4, 8, 8}));
    (out - torch::rand_like(out)).abs().mean().backward();
    for (const auto& item : G->named_parameters()) {
      INFO(item.key());
      const auto& p = item.value();
      REQUIRE(p.grad().defined());
      CHECK(p.grad().abs().sum().template item<double>() > 0);
    }
  }

  TEST_CASE("spectral norm bounds the top singular value") {
    torch::manual_seed(3);
    Generator G(GeneratorOptions{8, 32, 3, 1, 4});
    for (auto& conv : G->spectral_convs()) {
      const auto w = conv->normalized_weight().detach();
      CHECK(oracle::top_singular_value(w.reshape({w.size(0), -1})) <= 1.01);
    }
    SpectralNormConv2d sn(16, 16, 3, 1);
    sn->eval();
    const auto u = sn->u.clone();
    sn->forward(torch::randn({1, 16, 8, 8}));
    CHECK(torch::equal(u, sn->u));
    sn->train();
    sn->forward(torch::randn({1, 16, 8, 8}));
    CHECK_FALSE(torch::equal(u, sn->u));
  }

  TEST_CASE("generator gradients match finite differences") {
    const auto g = testing::generator_objective_gradient_check({false, true, 11});
    MESSAGE("checked " << g.checked << " worst " << g.worst);
    CHECK(g.pass_fraction() >= 0.95);
  }
}

TEST_SUITE("spade") {
  TEST_CASE("zero modulation gives plain normalization") {
    torch::manual_seed(0);
    Spade s(4, 6, 16);
    s->zero_modulation();
    const auto x = torch::randn({1, 4, 8, 8}, torch::kFloat64);
    s->to(torch::kFloat64);
    const auto y = s->forward(x, torch::randn({1, 6, 8, 8}, torch::kFloat64));
    const auto zeros = torch::zeros({4, 8, 8}, torch::kFloat64);
    CHECK((y[0] - oracle::spade(x[0], zeros, zeros, SpadeImpl::kEps)).abs().max().item<double>() < 1e-9);
  }

  TEST_CASE("constant activations give beta") {
    torch::manual_seed(1);
    Spade s(3, 4, 16);
    s->to(torch::kFloat64);
    const auto e = torch::randn({1, 4, 8, 8}, torch::kFloat64);
    const auto y = s->forward(torch::full({1, 3, 8, 8}, 2.5, torch::kFloat64), e);
    CHECK((y - s->modulation(e).second).abs().max().item<double>() < 1e-12);
  }

  TEST_CASE("matches the scalar denormalization oracle") {
    torch::manual_seed(2);
    Spade s(4, 5, 16);
    s->to(torch::kFloat64);
    const auto x = torch::randn({1, 4, 8, 8}, torch::kFloat64) * 3 + 1;
    const auto e = torch::randn({1, 5, 8, 8}, torch::kFloat64);
    auto [g, b] = s->modulation(e);
    const auto y = spade_modulate(x, e, s);
    CHECK((y[0] - oracle::spade(x[0], g[0], b[0], SpadeImpl::kEps)).abs().max().item<double>() < 1e-6);
    CHECK_THROWS_AS(spade_modulate(x, torch::randn({1, 5, 4, 4}, torch::kFloat64), s), ShapeError);
  }

  TEST_CASE("nearest resize") {
    const auto x = torch::randn({2, 5, 5});
    CHECK(torch::equal(resize_nearest(x, 5, 5), x));
    const auto small = torch::tensor({1.0f, 2.0f, 3.0f, 4.0f}).view({1, 2, 2});
    const auto big = resize_nearest(small, 4, 4);
    const auto expected = torch::tensor({1.0f, 1.0f, 2.0f, 2.0f, 1.0f, 1.0f, 2.0f, 2.0f, 3.0f, 3.0f, 4.0f, 4.0f, 3.0f, 3.0f, 4.0f, 4.0f}).view({1, 4, 4});
    CHECK(torch::equal(big, expected));
    const auto src = torch::randn({3, 16, 16});
    const auto out = resize_nearest(src, 7, 7);
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j)
        REQUIRE(torch::equal(out.select(1, i).select(1, j), src.select(1, i * 16 / 7).select(1, j * 16 / 7)));
    CHECK(resize_embedding({torch::randn({4, 8, 8})}, {16, 16}).values.sizes() == torch::IntArrayRef{4, 16, 16});
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("source order does not change the output") {
    auto cfg = testing::tiny_config();
    CainModel m = make_model(cfg.model, 4);
    const auto seq = generate_synthetic_identity(21, 6, 32);
    const auto a = make_batch(seq, {0, 1, 2, 3}, 5);
    const auto b = make_batch(seq, {2, 0, 3, 1}, 5);
    CHECK(torch::equal(synthesize(m, a, {}), synthesize(m, b, {})));
  }
}
