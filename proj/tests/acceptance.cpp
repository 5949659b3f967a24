// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "grouptest/harness.hpp"
#include "grouptest/numkern.hpp"
#include "grouptest/theory.hpp"
#include "oracles.hpp"

using namespace grouptest;

namespace {

const std::vector<TestName> kMain{TestName::Delta, TestName::ScJ, TestName::BrsLm};

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Point {
    std::size_t n = 100, t = 100;
    std::size_t m2 = 0;
    std::size_t p = 2, total_m = 0;
    double lambda = 0.0, h = 0.0;
    std::size_t reps = 1000;
    std::uint64_t seed = 1;
    bool clean = false;
};

std::map<std::string, PowerRow> run(const Point& pt) {
    ExperimentConfig cfg;
    cfg.dgp.n = pt.n;
    cfg.dgp.t = pt.t;
    cfg.dgp.p = pt.total_m == 0 && pt.m2 == 0 ? 1 : pt.p;
    if (pt.total_m > 0) {
        cfg.dgp.total_m = pt.total_m;
    } else if (cfg.dgp.p >= 2) {
        cfg.dgp.group_sizes = {pt.m2};
    }
    cfg.dgp.lambda = pt.lambda;
    cfg.dgp.h = pt.h;
    cfg.reps = pt.reps;
    cfg.seed = pt.seed;
    cfg.workers = workers();
    cfg.tests.which = kMain;
    if (pt.clean) {
        cfg.dgp.design = DgpDesign::Clean;
        for (auto t : kMain) cfg.tests.transform_map[t] = TransformKind::None;
    }
    std::map<std::string, PowerRow> out;
    for (const auto& r : run_design_point(cfg)) out[r.test] = r;
    return out;
}

std::string rates(const std::map<std::string, PowerRow>& rows) {
    std::string s;
    char buf[64];
    for (auto t : kMain) {
        const auto& r = rows.at(to_string(t));
        std::snprintf(buf, sizeof buf, "%s%s=%.3f", s.empty() ? "" : " ", r.test.c_str(), r.rejection_rate);
        s += buf;
    }
    return s;
}

bool report(int id, const char* what, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s | %s\n", pass ? "PASS" : "FAIL", id, what, detail.c_str());
    std::fflush(stdout);
    return pass;
}

bool in_band(const std::map<std::string, PowerRow>& rows, TestName t, double lo, double hi) {
    const auto& r = rows.at(to_string(t));
    return r.n_errors == 0 && r.rejection_rate >= lo && r.rejection_rate <= hi;
}

bool criterion1() {
    const auto a = run({.n = 100, .t = 100, .seed = 101});
    const auto b = run({.n = 100, .t = 10, .seed = 102});
    bool ok = true;
    for (auto t : kMain) ok = ok && in_band(a, t, 0.03, 0.07);
    ok = ok && in_band(b, TestName::BrsLm, 0.03, 0.07);
    ok = ok && in_band(b, TestName::Delta, 0.02, 0.10) && in_band(b, TestName::ScJ, 0.02, 0.10);
    return report(1, "size, lambda=0, reps=1000; T=100 in [0.03,0.07]; T=10 LM in [0.03,0.07], delta/J in [0.02,0.10]",
                  ok, "T=100: " + rates(a) + "; T=10: " + rates(b));
}

bool criterion2() {
    std::vector<std::map<std::string, PowerRow>> curve;
    for (std::size_t m : {10, 30, 50}) curve.push_back(run({.m2 = m, .lambda = 0.3, .seed = 200 + m}));
    const auto top = run({.m2 = 50, .lambda = 0.5, .seed = 250});
    bool ok = true;
    for (auto t : kMain) {
        const auto name = to_string(t);
        for (std::size_t i = 1; i < curve.size(); ++i) {
            const auto& lo = curve[i - 1].at(name);
            const auto& hi = curve[i].at(name);
            const double se = std::max(lo.mc_std_err, hi.mc_std_err);
            ok = ok && hi.rejection_rate - lo.rejection_rate > 2.0 * se;
        }
        ok = ok && top.at(name).rejection_rate >= 0.95;
    }
    return report(2, "power increasing in M2 (gaps > 2 se) at lambda=0.3; lambda=0.5, M2=50 power >= 0.95", ok,
                  "M2=10: " + rates(curve[0]) + "; M2=30: " + rates(curve[1]) + "; M2=50: " + rates(curve[2]) +
                      "; lambda=0.5: " + rates(top));
}

bool criterion3() {
    const auto small = run({.n = 100, .t = 10, .m2 = 5, .lambda = 0.1, .seed = 301});
    const auto large = run({.n = 100, .t = 100, .m2 = 50, .lambda = 0.3, .seed = 302});
    bool ok = true;
    for (auto t : kMain) {
        ok = ok && in_band(small, t, 0.0, 0.12);
        ok = ok && in_band(large, t, 0.5, 1.0);
    }
    return report(3, "M2=5 < sqrt(N) at T=10 power <= 0.12; M2=50, T=100 power >= 0.5", ok,
                  "M2=5: " + rates(small) + "; M2=50: " + rates(large));
}

bool criterion4() {
    const auto p3 = run({.p = 3, .total_m = 40, .lambda = 0.1, .h = 0.2, .seed = 401});
    const auto p10 = run({.p = 10, .total_m = 40, .lambda = 0.1, .h = 0.2, .seed = 402});
    bool ok = true;
    double worst = 0.0;
    for (auto t : kMain) {
        const double d = std::abs(p3.at(to_string(t)).rejection_rate - p10.at(to_string(t)).rejection_rate);
        worst = std::max(worst, d);
        ok = ok && d <= 0.15;
    }
    char buf[48];
    std::snprintf(buf, sizeof buf, "; max diff %.3f", worst);
    return report(4, "total M=40: |power(P=3) - power(P=10)| <= 0.15", ok,
                  "P=3: " + rates(p3) + "; P=10: " + rates(p10) + buf);
}

bool criterion5() {
    std::mt19937_64 gen(5);
    std::uniform_int_distribution<std::size_t> nd(2, 5), kd(1, 3);
    const double tol = 1e-10;
    double worst = 0.0;
    std::size_t failures = 0;
    auto check = [&](double a, double b) {
        const double d = oracle::rel_diff(a, b);
        worst = std::max(worst, d);
        if (!(d < tol)) ++failures;
    };
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t k = kd(gen);
        std::uniform_int_distribution<std::size_t> td(k + 3, 10);
        const auto p = oracle::random_panel(gen, nd(gen), td(gen), k);
        check(swamy_statistic(p).statistic, oracle::swamy(p));
        const auto d = delta_parts(p);
        const auto dr = oracle::delta(p);
        check(d.s_py, dr.s_py);
        check(d.delta, dr.delta);
        const auto j = sc_j_parts(p);
        const auto jr = oracle::sc_j(p);
        check(j.lm_sc, jr.lm);
        check(j.bias, jr.bias);
        check(j.variance, jr.variance);
        check(j.statistic, jr.j);
        const auto lm = brs_lm_parts(p);
        const auto lr = oracle::brs_lm(p);
        for (std::size_t a = 0; a < k; ++a) {
            check(lm.score[a], lr.score[a]);
            for (std::size_t b = 0; b < k; ++b) check(lm.variance(a, b), lr.variance[a][b]);
        }
        check(lm.statistic, lr.lm);
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "50 instances, max rel diff %.2e, %zu mismatches", worst, failures);
    return report(5, "streaming statistics match nested-loop oracle to 1e-10", failures == 0, buf);
}

struct Stats {
    double swamy, delta, j, lm;
};

Stats all_stats(const PanelDataset& p) {
    return {swamy_statistic(p).statistic, delta_test(p).statistic, sc_j_test(p).statistic, brs_lm_test(p).statistic};
}

double stats_diff(const Stats& a, const Stats& b) {
    return std::max({oracle::rel_diff(a.swamy, b.swamy), oracle::rel_diff(a.delta, b.delta),
                     oracle::rel_diff(a.j, b.j), oracle::rel_diff(a.lm, b.lm)});
}

bool criterion6() {
    double scale = 0.0, perm = 0.0, shift = 0.0;
    std::mt19937_64 gen(6);
    for (std::uint32_t rep = 0; rep < 10; ++rep) {
        DgpConfig cfg;
        cfg.n = 20;
        cfg.t = 15;
        cfg.p = 1;
        const auto base = within_demean(generate_panel(cfg, 600, rep).data);
        const auto ref = all_stats(base);
        for (double c : {0.5, 3.0, 100.0}) scale = std::max(scale, stats_diff(ref, all_stats(base.scaled_response(c))));

        std::vector<std::size_t> order(base.n_units());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), gen);
        perm = std::max(perm, stats_diff(ref, all_stats(base.permuted_units(order))));

        cfg.base_beta = -2.5;
        shift = std::max(shift, stats_diff(ref, all_stats(within_demean(generate_panel(cfg, 600, rep).data))));
    }
    const bool ok = scale < 1e-9 && perm < 1e-9 && shift < 1e-9;
    char buf[128];
    std::snprintf(buf, sizeof buf, "max rel diff: scale %.2e, permutation %.2e, beta shift %.2e", scale, perm, shift);
    return report(6, "invariance to y scale (1e-9), unit order (1e-9), common beta shift under H0 (1e-9)", ok, buf);
}

struct CleanSetup {
    std::size_t n = 400, t = 100, m = 100;
    double gamma = 0.0;
    MomentSpec moments;
};

const CleanSetup& clean_setup() {
    static const CleanSetup s = [] {
        CleanSetup c;
        c.gamma = boundary_gamma(static_cast<double>(c.n), static_cast<double>(c.t), static_cast<double>(c.m),
                                 Regime::LargeT);
        DgpConfig cfg;
        cfg.n = c.n;
        cfg.t = c.t;
        cfg.group_sizes = {c.m};
        cfg.design = DgpDesign::Clean;
        c.moments = estimate_moments(cfg, 100, 700, TransformKind::None).mean;
        return c;
    }();
    return s;
}

std::map<std::string, PowerRow> clean_power(double gamma, std::size_t reps, std::uint64_t seed) {
    const auto& s = clean_setup();
    return run({.n = s.n, .t = s.t, .m2 = s.m, .lambda = 1.0 / gamma, .reps = reps, .seed = seed, .clean = true});
}

bool criterion7() {
    const auto& s = clean_setup();
    const double c = plugin_c(static_cast<double>(s.n), static_cast<double>(s.t), static_cast<double>(s.m), s.gamma,
                              Regime::LargeT);
    const auto alt = LocalAlternative::two_group({1.0}, plugin_m0(static_cast<double>(s.n), static_cast<double>(s.m)), c);
    const double th_delta = asymptotic_power(TestName::Delta, noncentrality_delta(s.moments, alt), 1, 0.05);
    const double th_lm = asymptotic_power(TestName::BrsLm, noncentrality_lm(s.moments, alt).ncp, 1, 0.05);
    const auto rows = clean_power(s.gamma, 2000, 701);
    const double emp_delta = rows.at("delta").rejection_rate, emp_lm = rows.at("brs_lm").rejection_rate;
    const bool ok = std::abs(emp_delta - th_delta) <= 0.10 && std::abs(emp_lm - th_lm) <= 0.10;
    char buf[160];
    std::snprintf(buf, sizeof buf, "c=%.4f; delta: empirical %.3f vs asymptotic %.3f; LM: empirical %.3f vs asymptotic %.3f",
                  c, emp_delta, th_delta, emp_lm, th_lm);
    return report(7, "clean DGP at c=1, reps=2000: empirical power within 0.10 of asymptotic power", ok, buf);
}

bool criterion8() {
    const auto& s = clean_setup();
    const auto base = clean_power(s.gamma, 1000, 801);
    const auto far = clean_power(3.0 * s.gamma, 1000, 802);
    const auto near = clean_power(s.gamma / 3.0, 1000, 803);
    bool ok = true;
    for (auto t : kMain) {
        const auto name = to_string(t);
        const double b = base.at(name).rejection_rate;
        ok = ok && far.at(name).rejection_rate - 0.05 <= 0.5 * (b - 0.05);
        ok = ok && near.at(name).rejection_rate > 0.9;
    }
    return report(8, "clean DGP: 3x gamma at least halves power above alpha; gamma/3 gives power > 0.9", ok,
                  "gamma: " + rates(base) + "; 3 gamma: " + rates(far) + "; gamma/3: " + rates(near));
}

bool criterion9() {
    double normal = 0.0, central = 0.0, noncentral = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double z = -8.0 + 16.0 * i / 99.0;
        normal = std::max(normal, std::abs(std_normal_cdf(z) - oracle::normal_cdf(z)));

        const double df = 1.0 + (i % 10);
        const double x = 0.05 + 40.0 * i / 99.0;
        central = std::max(central, std::abs(chisq_cdf(x, df) - oracle::chisq_cdf(x, df)));

        const double ncp = 0.5 + (i % 7) * 1.5;
        const double xn = 0.1 + 45.0 * i / 99.0;
        const double ndf = 1.0 + (i % 4);
        noncentral = std::max(noncentral, std::abs(noncentral_chisq_cdf(xn, ndf, ncp) -
                                                   oracle::noncentral_chisq_cdf(xn, ndf, ncp)));
    }
    const bool ok = normal < 1e-8 && central < 1e-8 && noncentral < 1e-8;
    char buf[128];
    std::snprintf(buf, sizeof buf, "max abs diff: normal %.2e, chi2 %.2e, noncentral chi2 %.2e", normal, central,
                  noncentral);
    return report(9, "distribution functions match quadrature to 1e-8 on 100-point grids", ok, buf);
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    std::printf("acceptance run with %zu worker(s)\n", workers());
    int failed = 0;
    for (auto* f : {criterion5, criterion6, criterion9, criterion1, criterion2, criterion3, criterion4, criterion7,
                    criterion8})
        failed += f() ? 0 : 1;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d of 9 criteria failed (%.0f s)\n", failed, secs);
    return failed == 0 ? 0 : 1;
}
