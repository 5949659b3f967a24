#include <doctest.h>

#include <random>

#include "grouptest/dgp.hpp"
#include "grouptest/estimators.hpp"
#include "grouptest/transforms.hpp"
#include "oracles.hpp"

using namespace grouptest;

TEST_CASE("unit OLS exact fit") {
    const PanelDataset p(1, 4, 1, {2, 4, -2, 6}, {1, 2, -1, 3});
    const auto fit = unit_ols(p, 0);
    CHECK(fit.beta[0] == doctest::Approx(2.0).epsilon(1e-15));
    for (double e : fit.resid) CHECK(std::abs(e) < 1e-14);
    CHECK(fit.sigma2_hat < 1e-28);
}

TEST_CASE("unit OLS by hand") {
    const PanelDataset p(1, 3, 1, {1, 2, 4}, {1, 2, 3});
    const auto fit = unit_ols(p, 0);
    const double b = 17.0 / 14.0;
    CHECK(fit.beta[0] == doctest::Approx(b).epsilon(1e-15));
    CHECK(fit.resid[0] == doctest::Approx(1 - b).epsilon(1e-14));
    CHECK(fit.resid[1] == doctest::Approx(2 - 2 * b).epsilon(1e-14));
    CHECK(fit.resid[2] == doctest::Approx(4 - 3 * b).epsilon(1e-14));
    const double ssr = (1 - b) * (1 - b) + (2 - 2 * b) * (2 - 2 * b) + (4 - 3 * b) * (4 - 3 * b);
    CHECK(fit.sigma2_hat == doctest::Approx(ssr / 1.0));
    double h = 0.0;
    for (double v : fit.hat_diag) h += v;
    CHECK(h == doctest::Approx(1.0));
}

TEST_CASE("unit OLS needs T > K+1") {
    std::mt19937_64 gen(1);
    CHECK_THROWS_AS(unit_ols(oracle::random_panel(gen, 1, 3, 2), 0), DegenerateError);
    const PanelDataset collinear(1, 4, 2, {1, 2, 3, 4}, {1, 2, 2, 4, 3, 6, 4, 8});
    CHECK_THROWS_AS(unit_ols(collinear, 0), SingularError);
}

TEST_CASE("unit OLS matches oracle, hat trace is K") {
    std::mt19937_64 gen(2);
    const auto p = oracle::random_panel(gen, 3, 9, 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto fit = unit_ols(p, i);
        const auto ref = oracle::ols(oracle::unit_x(p, i), oracle::unit_y(p, i));
        for (std::size_t k = 0; k < 3; ++k) CHECK(oracle::rel_diff(fit.beta[k], ref[k]) < 1e-10);
        const auto h = oracle::hat(oracle::unit_x(p, i));
        double trace = 0.0;
        for (std::size_t t = 0; t < 9; ++t) {
            CHECK(std::abs(fit.hat_diag[t] - h[t][t]) < 1e-12);
            trace += fit.hat_diag[t];
        }
        CHECK(trace == doctest::Approx(3.0).epsilon(1e-12));
    }
}

TEST_CASE("pooled OLS") {
    const PanelDataset same(2, 3, 1, {1.5, 3.0, -1.5, 3.0, 0.75, 6.0}, {1, 2, -1, 2, 0.5, 4});
    const auto fit = pooled_ols(same);
    CHECK(fit.beta_ls[0] == doctest::Approx(1.5).epsilon(1e-15));
    for (double e : fit.resid) CHECK(std::abs(e) < 1e-14);

    std::mt19937_64 gen(3);
    const auto p = oracle::random_panel(gen, 2, 7, 2);
    const auto pooled = pooled_ols(p);
    // gram-weighted combination of unit slopes
    oracle::Mat g = oracle::zeros(2, 2);
    oracle::Vec gb(2, 0.0);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto x = oracle::unit_x(p, i);
        const auto gi = oracle::matmul(oracle::transpose(x), x);
        const auto bi = oracle::ols(x, oracle::unit_y(p, i));
        const auto v = oracle::matvec(gi, bi);
        for (std::size_t a = 0; a < 2; ++a) {
            gb[a] += v[a];
            for (std::size_t b = 0; b < 2; ++b) g[a][b] += gi[a][b];
        }
    }
    const auto combo = oracle::solve(g, gb);
    for (std::size_t k = 0; k < 2; ++k) CHECK(oracle::rel_diff(pooled.beta_ls[k], combo[k]) < 1e-10);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto e = oracle::pooled_resid(p, i);
        CHECK(pooled.sigma2_tilde[i] == doctest::Approx(oracle::dot(e, e) / 4.0).epsilon(1e-12));
    }
}

TEST_CASE("pooled residuals do not move with the common slope") {
    DgpConfig cfg;
    cfg.n = 20;
    cfg.t = 8;
    cfg.p = 1;
    cfg.design = DgpDesign::Clean;
    const auto a = generate_panel(cfg, 5, 0);
    cfg.base_beta = 4.0;
    const auto b = generate_panel(cfg, 5, 0);
    const auto ra = pooled_ols(a.data).resid, rb = pooled_ols(b.data).resid;
    for (std::size_t j = 0; j < ra.size(); ++j) CHECK(std::abs(ra[j] - rb[j]) < 1e-12);
}

TEST_CASE("WLS") {
    std::mt19937_64 gen(4);
    const auto p = oracle::random_panel(gen, 4, 6, 2);
    const std::vector<double> ones(4, 1.0), twos(4, 2.5);
    const auto w1 = wls(p, ones), w2 = wls(p, twos);
    const auto ls = pooled_ols(p).beta_ls;
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(oracle::rel_diff(w1[k], ls[k]) < 1e-12);
        CHECK(oracle::rel_diff(w2[k], ls[k]) < 1e-12);
    }
    const auto single = oracle::random_panel(gen, 1, 6, 2);
    const auto ws = wls(single, std::vector<double>{0.7});
    const auto us = unit_ols(single, 0).beta;
    for (std::size_t k = 0; k < 2; ++k) CHECK(oracle::rel_diff(ws[k], us[k]) < 1e-12);

    // N=2, K=1: (sum x'y/s2) / (sum x'x/s2) by hand
    const PanelDataset hand(2, 2, 1, {1, 2, 3, 1}, {1, 1, 2, 1});
    const auto wh = wls(hand, std::vector<double>{1.0, 4.0});
    const double num = (1 + 2) / 1.0 + (6 + 1) / 4.0, den = (1 + 1) / 1.0 + (4 + 1) / 4.0;
    CHECK(wh[0] == doctest::Approx(num / den).epsilon(1e-15));
    CHECK_THROWS_AS(wls(hand, std::vector<double>{1.0, 0.0}), DegenerateError);
}

TEST_CASE("pooled estimator on transformed panels") {
    std::mt19937_64 gen(6);
    const auto p = oracle::random_panel(gen, 3, 5, 1);
    const auto f = forward_orthogonal(p);
    const auto fit = pooled_residuals(f);
    CHECK(fit.resid.size() == 3 * 4);
    CHECK(fit.sigma2_tilde.empty());
}
