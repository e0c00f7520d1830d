#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mixclust/model.hpp"
#include "mixclust/rng.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace mixclust;

namespace {

ModelParams single_cluster_params(double mu, double lambda, std::vector<std::vector<double>> rho) {
    ModelParams p;
    p.K = 1;
    p.pi = {1.0};
    p.mu = {mu};
    p.lambda = {lambda};
    p.rho = {std::move(rho)};
    return p;
}

}  // namespace

TEST_CASE("log_component_density: fully missing object contributes 0.0") {
    auto d = testutil::make_dataset(1, 2, {2});
    ModelParams p;
    p.K = 1;
    p.pi = {1.0};
    p.mu = {0.0, 1.0};
    p.lambda = {1.0, 2.0};
    p.rho = {{{0.5, 0.5}}};
    CHECK(log_component_density(d, 0, 0, p) == 0.0);
}

TEST_CASE("log_component_density: standard normal at its mode") {
    auto d = testutil::make_dataset(1, 1, {});
    d.set_x(0, 0, 0.0);
    auto p = single_cluster_params(0.0, 1.0, {});
    // log(1/sqrt(2 pi)), frozen from the linear-space oracle
    CHECK(log_component_density(d, 0, 0, p) ==
          doctest::Approx(-0.91893853320467267).epsilon(1e-14));
}

TEST_CASE("log_component_density: mixed numeric + categorical vs linear-space oracle") {
    auto d = testutil::make_dataset(1, 1, {4});
    d.set_x(0, 0, 1.0);
    d.set_y(0, 0, 2);
    auto p = single_cluster_params(0.5, 4.0, {{0.25, 0.25, 0.25, 0.25}});
    const double frozen = -2.1120857137646181;
    CHECK(log_component_density(d, 0, 0, p) == doctest::Approx(frozen).epsilon(1e-13));
    CHECK(log_component_density(d, 0, 0, p) ==
          doctest::Approx(oracle::log_component_density(d, 0, 0, p)).epsilon(1e-13));
}

TEST_CASE("log_map_objective: fully missing object leaves only prior terms") {
    auto d = testutil::make_dataset(1, 2, {});
    Hyperparams h;
    h.a = 2.0;
    h.b = 0.1;
    h.alpha = 0.0;
    ModelParams p;
    p.K = 1;
    p.pi = {1.0};
    p.mu = {0.0, 0.0};
    p.lambda = {3.0, 7.0};
    p.rho = {{}};
    const double expect =
        log_gamma_density(3.0, 2.0, 0.1) + log_gamma_density(7.0, 2.0, 0.1);
    CHECK(log_map_objective(d, p, h) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("gamma prior term: a=2, b=1, lambda=1 contributes exactly -1") {
    CHECK(log_gamma_density(1.0, 2.0, 1.0) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("likelihood part with mu at the sample mean matches the oracle") {
    auto d = testutil::make_dataset(2, 1, {});
    d.set_x(0, 0, 1.0);
    d.set_x(1, 0, 3.0);
    auto p = single_cluster_params(2.0, 0.7, {});
    const double frozen = -2.8945520103480775;
    CHECK(log_likelihood(d, p) == doctest::Approx(frozen).epsilon(1e-13));
    CHECK(log_likelihood(d, p) == doctest::Approx(oracle::log_likelihood(d, p)).epsilon(1e-13));
}

TEST_CASE("objective is invariant under cluster permutation") {
    Rng rng = Rng::from_seed(31);
    for (int trial = 0; trial < 20; ++trial) {
        Dataset d = testutil::random_dataset(12, 3, {2, 3}, 0.3, rng);
        ModelParams p = testutil::random_params(3, 3, {2, 3}, rng);
        Hyperparams h;
        std::vector<int> perm = {2, 0, 1};
        ModelParams q = p.permuted(perm);
        CHECK(log_map_objective(d, q, h) ==
              doctest::Approx(log_map_objective(d, p, h)).epsilon(1e-12));
    }
}

TEST_CASE("masked cells never influence the outputs, bit-exactly") {
    Rng rng = Rng::from_seed(37);
    Dataset d = testutil::random_dataset(10, 3, {3}, 0.4, rng);
    ModelParams p = testutil::random_params(2, 3, {3}, rng);
    Hyperparams h;
    const double before_obj = log_map_objective(d, p, h);
    const double before_dens = log_component_density(d, 4, 1, p);
    // Scribble on the storage behind every masked cell.
    Dataset d2 = d;
    for (std::size_t i = 0; i < d2.x.size(); ++i)
        if (!d2.x_obs[i]) d2.x[i] = 1e300;
    for (std::size_t i = 0; i < d2.y.size(); ++i)
        if (!d2.y_obs[i]) d2.y[i] = 2;
    CHECK(log_map_objective(d2, p, h) == before_obj);
    CHECK(log_component_density(d2, 4, 1, p) == before_dens);
}

TEST_CASE("alpha=0 objective minus gamma terms equals brute-force likelihood") {
    Rng rng = Rng::from_seed(41);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_below(4));
        const int K = 1 + static_cast<int>(rng.uniform_below(2));
        Dataset d = testutil::random_dataset(n, 2, {2, 3}, 0.3, rng);
        ModelParams p = testutil::random_params(K, 2, {2, 3}, rng);
        Hyperparams h;
        h.alpha = 0.0;
        double gamma_terms = 0.0;
        for (int k = 0; k < K; ++k)
            for (int r = 0; r < 2; ++r)
                gamma_terms += log_gamma_density(p.lambda_at(k, r), h.a, h.b);
        const double likelihood_part = log_map_objective(d, p, h) - gamma_terms;
        CHECK(likelihood_part == doctest::Approx(oracle::log_likelihood(d, p)).epsilon(1e-11));
    }
}

TEST_CASE("objective is -inf only for a zero rho hit with alpha=0") {
    auto d = testutil::make_dataset(1, 0, {2});
    d.set_y(0, 0, 1);
    ModelParams p;
    p.K = 1;
    p.pi = {1.0};
    p.rho = {{{1.0, 0.0}}};
    Hyperparams h;
    h.alpha = 0.0;
    CHECK(log_map_objective(d, p, h) == kNegInf);
    // With the observed value on the nonzero entry the objective is finite.
    auto d2 = testutil::make_dataset(1, 0, {2});
    d2.set_y(0, 0, 0);
    CHECK(std::isfinite(log_map_objective(d2, p, h)));
}

TEST_CASE("params validate() enforces the documented invariants") {
    ModelParams p;
    p.K = 2;
    p.pi = {0.5, 0.5};
    p.mu = {0.0, 0.0};
    p.lambda = {1.0, 1.0};
    p.rho = {{{0.5, 0.5}}, {{0.5, 0.5}}};
    CHECK_NOTHROW(p.validate());
    SUBCASE("pi must sum to one") {
        p.pi = {0.5, 0.6};
        CHECK_THROWS_AS(p.validate(), ValueError);
    }
    SUBCASE("lambda must be positive") {
        p.lambda[0] = 0.0;
        CHECK_THROWS_AS(p.validate(), ValueError);
    }
    SUBCASE("rho rows must normalize") {
        p.rho[0][0] = {0.9, 0.2};
        CHECK_THROWS_AS(p.validate(), ValueError);
    }
}

TEST_CASE("hyperparams: scalar validation and per-(k,r) matrices") {
    Hyperparams h;
    CHECK_NOTHROW(h.validate());
    CHECK(h.prior_mode(0, 0) == doctest::Approx(10.0));
    SUBCASE("a must exceed 1") {
        h.a = 1.0;
        CHECK_THROWS_AS(h.validate(), ValueError);
    }
    SUBCASE("matrix overrides are honored") {
        h.a_matrix = {{2.0, 3.0}, {2.0, 2.0}};
        h.b_matrix = {{0.1, 0.5}, {0.1, 0.1}};
        CHECK_NOTHROW(h.validate());
        CHECK(h.shape(0, 1) == 3.0);
        CHECK(h.rate(0, 1) == 0.5);
        CHECK(h.prior_mode(0, 1) == doctest::Approx(4.0));
    }
    SUBCASE("matrix entries are validated too") {
        h.a_matrix = {{0.5}};
        h.b_matrix = {{0.1}};
        CHECK_THROWS_AS(h.validate(), ValueError);
    }
}

TEST_CASE("shape mismatches are rejected, not undefined") {
    Rng rng = Rng::from_seed(59);
    Dataset d = testutil::random_dataset(4, 2, {2}, 0.0, rng);
    ModelParams p = testutil::random_params(2, 3, {2}, rng);  // 3 numerics vs dataset's 2
    Hyperparams h;
    CHECK_THROWS_AS(log_map_objective(d, p, h), ValueError);
    SUBCASE("hyperparameter matrix with wrong dims") {
        ModelParams ok = testutil::random_params(2, 2, {2}, rng);
        Hyperparams bad;
        bad.a_matrix = {{2.0}};
        bad.b_matrix = {{0.1}};
        CHECK_THROWS_AS(log_map_objective(d, ok, bad), ValueError);
    }
}

TEST_CASE("model JSON round-trip") {
    Rng rng = Rng::from_seed(53);
    ModelParams p = testutil::random_params(3, 2, {2, 4}, rng);
    Hyperparams h;
    auto j = model_to_json(p, h, 77, -123.5);
    CHECK(j.at("format") == kModelFormat);
    CHECK(j.at("seed") == 77);
    ModelParams q = model_from_json(j);
    CHECK(q.K == p.K);
    CHECK(q.pi == p.pi);
    CHECK(q.mu == p.mu);
    CHECK(q.lambda == p.lambda);
    CHECK(q.rho == p.rho);
}
