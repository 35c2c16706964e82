#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "cain/embedder.hpp"
#include "cain/errors.hpp"
#include "fixtures.hpp"

using namespace cain;

namespace {

using Pairs = std::vector<std::pair<SpatialEmbedding, ResponsibilityMap>>;

Pairs random_pairs(int K, std::vector<int64_t> shape) {
  Pairs p;
  for (int i = 0; i < K; ++i)
    p.push_back({{torch::randn(shape, torch::kFloat64)}, {torch::rand(shape, torch::kFloat64) + 0.05}});
  return p;
}

double max_diff(const torch::Tensor& a, const torch::Tensor& b) {
  return (a.to(torch::kFloat64) - b.to(torch::kFloat64)).abs().max().item<double>();
}

}  // namespace

TEST_SUITE("embedder") {
  TEST_CASE("output shapes and positive responsibility") {
    torch::manual_seed(0);
    TargetedEmbedder E(64);
    E->eval();
    const auto x = torch::rand({1, 3, 64, 64}) * 2 - 1;
    auto [e, r] = E->forward(x, x, x);
    CHECK(e.sizes() == torch::IntArrayRef{1, 64, 16, 16});
    CHECK(r.sizes() == torch::IntArrayRef{1, 64, 16, 16});

    TargetedEmbedder small(8);
    for (int i = 0; i < 100; ++i) {
      const auto f = torch::randn({1, 3, 16, 16}) * 3;
      auto [e2, r2] = small->forward(f, f.flip({2}), -f);
      REQUIRE(r2.min().item<double>() >= kResponsibilityEpsilon * (1 - 1e-6));
    }
  }

  TEST_CASE("target landmarks change the embedding") {
    torch::manual_seed(1);
    TargetedEmbedder E(16);
    E->eval();
    const auto frame = torch::rand({3, 32, 32}) * 2 - 1;
    const auto lm = torch::rand({3, 32, 32}) * 2 - 1;
    auto [e1, r1] = embed_single(frame, lm, torch::rand({3, 32, 32}) * 2 - 1, E);
    auto [e2, r2] = embed_single(frame, lm, torch::rand({3, 32, 32}) * 2 - 1, E);
    CHECK(max_diff(e1.values, e2.values) > 0);
  }

  TEST_CASE("embed_single rejects mismatched shapes") {
    TargetedEmbedder E(8);
    try {
      embed_single(torch::zeros({3, 32, 32}), torch::zeros({3, 16, 16}), torch::zeros({3, 32, 32}), E);
      FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
      CHECK(std::string(e.what()).find("[3, 16, 16]") != std::string::npos);
    }
  }

  TEST_CASE("single source is returned exactly") {
    const auto p = random_pairs(1, {4, 3, 3});
    CHECK(torch::equal(combine_embeddings(p).values, p[0].first.values));
    CHECK(torch::equal(combine_uniform({p[0].first}).values, p[0].first.values));
  }

  TEST_CASE("hand cases") {
    const auto ones = torch::ones({2, 2, 2}, torch::kFloat64);
    Pairs p{{{ones * 0}, {ones}}, {{ones * 2}, {ones}}};
    CHECK(max_diff(combine_embeddings(p).values, ones) == 0);
    CHECK(max_diff(combine_uniform({{ones * 0}, {ones * 2}}).values, ones) == 0);
    Pairs cell{{{torch::full({1, 1, 1}, 1.0, torch::kFloat64)}, {torch::full({1, 1, 1}, 3.0, torch::kFloat64)}},
               {{torch::full({1, 1, 1}, 3.0, torch::kFloat64)}, {torch::full({1, 1, 1}, 1.0, torch::kFloat64)}}};
    CHECK(combine_embeddings(cell).values.item<double>() == doctest::Approx(1.5).epsilon(1e-12));
  }

  TEST_CASE("matches the triple-loop oracle") {
    torch::manual_seed(2);
    for (int K : {1, 2, 4, 8})
      for (int trial = 0; trial < 10; ++trial) {
        const auto p = random_pairs(K, {2, 3, 3});
        std::vector<torch::Tensor> es, rs;
        for (const auto& [e, r] : p) {
          es.push_back(e.values);
          rs.push_back(r.values);
        }
        CHECK(max_diff(combine_embeddings(p).values, oracle::combine(es, rs)) < 1e-6);
      }
  }

  TEST_CASE("permutation invariance is exact") {
    torch::manual_seed(3);
    auto p = random_pairs(8, {4, 5, 5});
    const auto ref = combine_embeddings(p).values;
    std::vector<int> order(8);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937 rng(0);
    for (int t = 0; t < 20; ++t) {
      std::shuffle(order.begin(), order.end(), rng);
      Pairs q;
      for (int i : order) q.push_back(p[i]);
      CHECK(torch::equal(combine_embeddings(q).values, ref));
    }
  }

  TEST_CASE("convexity and scale invariance") {
    torch::manual_seed(4);
    const auto p = random_pairs(5, {3, 4, 4});
    const auto ex = combine_embeddings(p).values;
    std::vector<torch::Tensor> es;
    for (const auto& [e, r] : p) es.push_back(e.values);
    const auto stacked = torch::stack(es);
    CHECK((ex >= std::get<0>(stacked.min(0)) - 1e-12).all().item<bool>());
    CHECK((ex <= std::get<0>(stacked.max(0)) + 1e-12).all().item<bool>());
    for (double c : {1e-3, 0.5, 7.0, 1e3}) {
      Pairs scaled;
      for (const auto& [e, r] : p) scaled.push_back({e, {r.values * c}});
      CHECK(max_diff(combine_embeddings(scaled).values, ex) < 1e-6);
    }
  }

  TEST_CASE("uniform fusion equals constant responsibility") {
    torch::manual_seed(5);
    for (int K : {2, 3, 8}) {
      auto p = random_pairs(K, {4, 4, 4});
      std::vector<SpatialEmbedding> es;
      for (auto& [e, r] : p) {
        es.push_back(e);
        r.values = torch::full_like(r.values, 0.37 * K);
      }
      CHECK(max_diff(combine_uniform(es).values, combine_embeddings(p).values) < 1e-6);
    }
  }

  TEST_CASE("empty and mismatched inputs") {
    CHECK_THROWS_AS(combine_embeddings({}), UsageError);
    Pairs p{{{torch::zeros({2, 2, 2})}, {torch::ones({2, 2, 2})}}, {{torch::zeros({2, 3, 2})}, {torch::ones({2, 3, 2})}}};
    CHECK_THROWS_AS(combine_embeddings(p), ShapeError);
  }

  TEST_CASE("embedder gradients match finite differences") {
    const auto g = testing::generator_objective_gradient_check({true, false, 7});
    MESSAGE("checked " << g.checked << " worst " << g.worst);
    CHECK(g.pass_fraction() >= 0.95);
  }
}
