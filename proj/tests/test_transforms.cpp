#include <doctest.h>

#include <random>

#include "grouptest/rng.hpp"
#include "grouptest/transforms.hpp"
#include "oracles.hpp"

using namespace grouptest;

TEST_CASE("within: constants vanish, means removed") {
    const PanelDataset c(1, 4, 1, {2, 2, 2, 2}, {5, 5, 5, 5});
    const auto w = within_demean(c);
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(w.y(0, t) == 0.0);
        CHECK(w.x(0, t, 0) == 0.0);
    }
    const auto d = within_demean(PanelDataset(1, 3, 1, {1, 2, 3}, {0, 0, 1}));
    CHECK(d.y(0, 0) == -1.0);
    CHECK(d.y(0, 1) == 0.0);
    CHECK(d.y(0, 2) == 1.0);
}

TEST_CASE("within matches explicit M0 product") {
    std::mt19937_64 gen(21);
    const auto p = oracle::random_panel(gen, 3, 5, 2);
    const auto w = within_demean(p);
    const auto m0 = oracle::within_matrix(5);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto y = oracle::matvec(m0, oracle::unit_y(p, i));
        const auto x = oracle::matmul(m0, oracle::unit_x(p, i));
        for (std::size_t t = 0; t < 5; ++t) {
            CHECK(std::abs(w.y(i, t) - y[t]) < 1e-12);
            for (std::size_t k = 0; k < 2; ++k) CHECK(std::abs(w.x(i, t, k) - x[t][k]) < 1e-12);
        }
    }
}

TEST_CASE("within is idempotent and linear") {
    std::mt19937_64 gen(22);
    const auto a = oracle::random_panel(gen, 4, 6, 1);
    const auto b = oracle::random_panel(gen, 4, 6, 1);
    const auto once = within_demean(a);
    const auto twice = within_demean(once);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t t = 0; t < 6; ++t) CHECK(std::abs(once.y(i, t) - twice.y(i, t)) < 1e-13);

    std::vector<double> y(a.y_data().size()), x(a.x_data().size());
    for (std::size_t j = 0; j < y.size(); ++j) y[j] = 2.0 * a.y_data()[j] - 3.0 * b.y_data()[j];
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = 2.0 * a.x_data()[j] - 3.0 * b.x_data()[j];
    const auto combo = within_demean(PanelDataset(4, 6, 1, y, x));
    const auto wa = within_demean(a), wb = within_demean(b);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t t = 0; t < 6; ++t) {
            CHECK(std::abs(combo.y(i, t) - (2.0 * wa.y(i, t) - 3.0 * wb.y(i, t))) < 1e-12);
            CHECK(std::abs(combo.x(i, t, 0) - (2.0 * wa.x(i, t, 0) - 3.0 * wb.x(i, t, 0))) < 1e-12);
        }
}

TEST_CASE("forward orthogonal deviations: closed forms") {
    const auto c = forward_orthogonal(PanelDataset(1, 5, 1, {3, 3, 3, 3, 3}, {1, 1, 1, 1, 1}));
    CHECK(c.n_periods() == 4);
    for (std::size_t t = 0; t < 4; ++t) CHECK(std::abs(c.y(0, t)) < 1e-15);

    const auto two = forward_orthogonal(PanelDataset(1, 2, 1, {5.0, 2.0}, {1.0, 4.0}));
    CHECK(two.n_periods() == 1);
    CHECK(two.y(0, 0) == doctest::Approx((5.0 - 2.0) / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(two.x(0, 0, 0) == doctest::Approx((1.0 - 4.0) / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(two.time_ids() == std::vector<std::string>{"1"});
}

TEST_CASE("forward orthogonal deviations match explicit operator") {
    std::mt19937_64 gen(23);
    const auto p = oracle::random_panel(gen, 3, 6, 2);
    const auto f = forward_orthogonal(p);
    const auto a = oracle::fod_matrix(6);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto y = oracle::matvec(a, oracle::unit_y(p, i));
        const auto x = oracle::matmul(a, oracle::unit_x(p, i));
        for (std::size_t t = 0; t < 5; ++t) {
            CHECK(std::abs(f.y(i, t) - y[t]) < 1e-12);
            for (std::size_t k = 0; k < 2; ++k) CHECK(std::abs(f.x(i, t, k) - x[t][k]) < 1e-12);
        }
    }
}

TEST_CASE("forward orthogonal deviations keep iid errors white") {
    constexpr std::size_t n = 100000, t_len = 5;
    std::vector<double> y(n * t_len), x(n * t_len, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        CounterStream rng(99, 0, static_cast<std::uint32_t>(i), StreamPurpose::Error);
        for (std::size_t t = 0; t < t_len; ++t) y[i * t_len + t] = rng.normal();
    }
    const auto f = forward_orthogonal(PanelDataset(n, t_len, 1, std::move(y), std::move(x)));
    for (std::size_t a = 0; a < t_len - 1; ++a)
        for (std::size_t b = 0; b < t_len - 1; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += f.y(i, a) * f.y(i, b);
            CHECK(std::abs(s / n - (a == b ? 1.0 : 0.0)) < 0.02);
        }
}

TEST_CASE("transform dispatch and errors") {
    CHECK(parse_transform("fod") == TransformKind::ForwardOrthogonal);
    CHECK(parse_transform("forward_orthogonal") == TransformKind::ForwardOrthogonal);
    CHECK(to_string(TransformKind::Within) == "within");
    CHECK_THROWS_AS(parse_transform("diff"), ConfigError);
    const PanelDataset one(2, 1, 1, {1, 2}, {3, 4});
    CHECK_THROWS_AS(within_demean(one), DegenerateError);
    CHECK_THROWS_AS(forward_orthogonal(one), DegenerateError);
    CHECK(apply_transform(one, TransformKind::None) == one);
}
