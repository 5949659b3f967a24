#include "grouptest/theory.hpp"

#include <cmath>
#include <functional>

#include "grouptest/estimators.hpp"
#include "grouptest/slope_tests.hpp"

namespace grouptest {

std::string to_string(Regime r) {
    return r == Regime::LargeT ? "large_t" : "fixed_t";
}

Regime parse_regime(const std::string& s) {
    if (s == "large_t" || s == "large-t") return Regime::LargeT;
    if (s == "fixed_t" || s == "fixed-t") return Regime::FixedT;
    throw ConfigError("unknown regime '" + s + "' (expected large_t or fixed_t)");
}

MomentSpec MomentSpec::scalar(double q, double s, double w, double omega, double psi, double v0,
                              std::size_t n_groups) {
    auto one = [](double v) { return SymMatrix{{v}}; };
    GroupMoments g{one(q), one(s), one(w), {one(omega)}, one(s), {one(omega)}};
    MomentSpec ms;
    ms.k = 1;
    ms.full = g;
    ms.groups.assign(n_groups, g);
    ms.psi = one(psi);
    ms.curly_v = one(psi);
    ms.v0 = v0;
    return ms;
}

void MomentSpec::validate() const {
    auto check_group = [&](const GroupMoments& g) {
        for (const auto* m : {&g.q, &g.s, &g.w, &g.sigma_cap})
            if (m->dim() != k) throw ConfigError("moment matrix dimension does not match K");
        if (g.omega.size() != k || g.u.size() != k)
            throw ConfigError("one omega / U matrix per regressor required");
        for (const auto& m : g.omega)
            if (m.dim() != k) throw ConfigError("omega dimension does not match K");
        for (const auto& m : g.u)
            if (m.dim() != k) throw ConfigError("U dimension does not match K");
    };
    check_group(full);
    if (groups.empty()) throw ConfigError("moment spec has no alternative group blocks");
    for (const auto& g : groups) check_group(g);
    if (psi.dim() != k || curly_v.dim() != k) throw ConfigError("psi dimension does not match K");
    if (!(v0 >= 0.0)) throw ConfigError("v0 must be non-negative");
}

LocalAlternative LocalAlternative::two_group(std::vector<double> lambda, double m0, double c) {
    return LocalAlternative{{std::move(lambda)}, {m0}, {c}};
}

double LocalAlternative::m0() const {
    double s = 0.0;
    for (double v : m) s += v;
    return s;
}

void LocalAlternative::validate(std::size_t k) const {
    if (lambdas.empty()) throw ConfigError("at least one alternative group required");
    if (m.size() != lambdas.size() || c.size() != lambdas.size())
        throw ConfigError("lambda, m and c must have one entry per alternative group");
    for (const auto& l : lambdas)
        if (l.size() != k) throw ConfigError("lambda length does not match K");
    for (double v : m)
        if (!(v >= 0.0 && v < 1.0)) throw ConfigError("group shares must lie in [0,1)");
    if (!(m0() < 1.0)) throw ConfigError("group shares must sum to less than 1");
    for (double v : c)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("c must be finite and non-negative");
}

double boundary_gamma(double n, double t, double m, Regime regime) {
    const double tt = regime == Regime::LargeT ? t : 1.0;
    return std::sqrt(m * tt) / std::pow(n, 0.25);
}

double plugin_m0(double n, double m) {
    return m / n;
}

double plugin_c(double n, double t, double m, double gamma, Regime regime) {
    return boundary_gamma(n, t, m, regime) / gamma;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void check_groups(const MomentSpec& ms, const LocalAlternative& alt) {
    alt.validate(ms.k);
    if (ms.groups.size() < alt.lambdas.size())
        throw ConfigError("moment spec has " + std::to_string(ms.groups.size()) +
                          " group blocks, alternative needs " + std::to_string(alt.lambdas.size()));
}

double delta_kernel(const MomentSpec& ms, const LocalAlternative& alt) {
    const auto q_chol = cholesky(ms.full.q);
    const std::size_t g_count = alt.lambdas.size();
    std::vector<std::vector<double>> ql(g_count), qinv_ql(g_count);
    for (std::size_t p = 0; p < g_count; ++p) {
        ql[p] = ms.groups[p].q.multiply(alt.lambdas[p]);
        qinv_ql[p] = q_chol.solve(ql[p]);
    }
    double single = 0.0, cross = 0.0;
    for (std::size_t p = 0; p < g_count; ++p) single += alt.c[p] * alt.c[p] * dot(alt.lambdas[p], ql[p]);
    for (std::size_t p = 0; p < g_count; ++p)
        for (std::size_t q = 0; q < g_count; ++q)
            cross += alt.m[p] * alt.c[q] * alt.c[q] * dot(ql[p], qinv_ql[q]);
    return (single - cross) / std::sqrt(2.0 * static_cast<double>(ms.k));
}

double j_kernel(const MomentSpec& ms, const LocalAlternative& alt) {
    if (!(ms.v0 > 0.0)) throw DegenerateError("v0 must be positive");
    const auto s_chol = cholesky(ms.full.s);
    const std::size_t g_count = alt.lambdas.size();
    std::vector<std::vector<double>> u(g_count), wl(g_count);
    for (std::size_t p = 0; p < g_count; ++p) {
        u[p] = s_chol.solve(ms.groups[p].s.multiply(alt.lambdas[p]));
        wl[p] = ms.groups[p].w.multiply(alt.lambdas[p]);
    }
    double single = 0.0, cross = 0.0;
    for (std::size_t p = 0; p < g_count; ++p) single += alt.c[p] * alt.c[p] * dot(alt.lambdas[p], wl[p]);
    for (std::size_t p = 0; p < g_count; ++p)
        for (std::size_t q = 0; q < g_count; ++q) {
            const double bracket = dot(u[p], ms.full.w.multiply(u[q])) - 2.0 * dot(wl[p], u[q]);
            cross += alt.m[p] * alt.c[q] * alt.c[q] * bracket;
        }
    return (single + cross) / std::sqrt(ms.v0);
}

LmNoncentrality lm_kernel(const MomentSpec& ms, const LocalAlternative& alt, Regime regime) {
    const bool fixed = regime == Regime::FixedT;
    auto s_of = [&](const GroupMoments& g) -> const SymMatrix& { return fixed ? g.sigma_cap : g.s; };
    auto omega_of = [&](const GroupMoments& g) -> const std::vector<SymMatrix>& {
        return fixed ? g.u : g.omega;
    };
    const SymMatrix& psi = fixed ? ms.curly_v : ms.psi;

    const auto s_chol = cholesky(s_of(ms.full));
    const std::size_t g_count = alt.lambdas.size();
    std::vector<std::vector<double>> u(g_count);
    for (std::size_t p = 0; p < g_count; ++p) u[p] = s_chol.solve(s_of(ms.groups[p]).multiply(alt.lambdas[p]));

    LmNoncentrality out;
    out.delta.assign(ms.k, 0.0);
    for (std::size_t k = 0; k < ms.k; ++k) {
        const auto& omega_full = omega_of(ms.full)[k];
        double single = 0.0, cross = 0.0;
        for (std::size_t p = 0; p < g_count; ++p)
            single += alt.c[p] * alt.c[p] * omega_of(ms.groups[p])[k].quad_form(alt.lambdas[p]);
        for (std::size_t p = 0; p < g_count; ++p)
            for (std::size_t q = 0; q < g_count; ++q) {
                const double bracket = dot(u[p], omega_full.multiply(u[q])) -
                                       2.0 * dot(u[p], omega_of(ms.groups[q])[k].multiply(alt.lambdas[q]));
                cross += alt.m[p] * alt.c[q] * alt.c[q] * bracket;
            }
        out.delta[k] = single + cross;
    }
    const auto z = spd_solve(psi, out.delta);
    out.ncp = dot(out.delta, z);
    return out;
}

}  // namespace

double noncentrality_delta(const MomentSpec& ms, const LocalAlternative& alt) {
    check_groups(ms, alt);
    return delta_kernel(ms, alt);
}

double noncentrality_j(const MomentSpec& ms, const LocalAlternative& alt) {
    check_groups(ms, alt);
    return j_kernel(ms, alt);
}

LmNoncentrality noncentrality_lm(const MomentSpec& ms, const LocalAlternative& alt, Regime regime) {
    check_groups(ms, alt);
    return lm_kernel(ms, alt, regime);
}

MultigroupNoncentrality noncentrality_multigroup(const MomentSpec& ms, const LocalAlternative& alt,
                                                 Regime regime) {
    check_groups(ms, alt);
    if (regime == Regime::FixedT)
        throw ConfigError("delta and J have no fixed-T local power result; use the LM calculator");
    return {delta_kernel(ms, alt), j_kernel(ms, alt), lm_kernel(ms, alt, regime)};
}

double asymptotic_power(TestName test, double noncentrality, std::size_t k, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie strictly inside (0,1)");
    switch (test) {
        case TestName::Delta:
        case TestName::ScJ:
            return std_normal_sf(std_normal_quantile(1.0 - alpha) - noncentrality);
        case TestName::BrsLm: {
            const double df = static_cast<double>(k);
            return noncentral_chisq_sf(chisq_quantile(1.0 - alpha, df), df, noncentrality);
        }
        case TestName::Swamy: break;
    }
    throw ConfigError("no asymptotic local power result for " + to_string(test));
}

// ---------------------------------------------------------------------------

namespace {

GroupMoments zero_group(std::size_t k) {
    return {SymMatrix(k), SymMatrix(k), SymMatrix(k), std::vector<SymMatrix>(k, SymMatrix(k)),
            SymMatrix(k), std::vector<SymMatrix>(k, SymMatrix(k))};
}

MomentSpec zero_spec(std::size_t k, std::size_t n_groups) {
    MomentSpec ms;
    ms.k = k;
    ms.full = zero_group(k);
    ms.groups.assign(n_groups, zero_group(k));
    ms.psi = SymMatrix(k);
    ms.curly_v = SymMatrix(k);
    return ms;
}

/// Sums over the units of one group (unscaled).
struct UnitSums {
    SymMatrix gram_over_sigma2, gram, w;
    std::vector<SymMatrix> omega;  // sum_{s<t} x_t,k x_s,k sym(x_t x_s')
    SymMatrix psi;                 // sigma^4 sum_{s<t} x_t,k x_t,l x_s,k x_s,l
};

UnitSums unit_sums(const PanelDataset& data, std::size_t i, double sigma2) {
    const auto t_len = data.n_periods(), k_len = data.n_regressors();
    UnitSums u{SymMatrix(k_len), unit_gram(data, i), SymMatrix(k_len),
               std::vector<SymMatrix>(k_len, SymMatrix(k_len)), SymMatrix(k_len)};
    u.gram_over_sigma2 = u.gram * (1.0 / sigma2);
    const auto chol = cholesky(u.gram);

    std::vector<std::vector<double>> prefix_vec(k_len, std::vector<double>(k_len, 0.0));  // sum_{s<t} x_s,k x_s
    SymMatrix prefix_sq(k_len);                                                          // sum_{s<t} x_s,k x_s,l
    for (std::size_t t = 0; t < t_len; ++t) {
        const auto r = data.row(i, t);
        const auto z = chol.solve(r);
        double h = 0.0;
        for (std::size_t k = 0; k < k_len; ++k) h += r[k] * z[k];
        u.w.add_outer(r, 1.0 - h);

        for (std::size_t k = 0; k < k_len; ++k)
            for (std::size_t a = 0; a < k_len; ++a)
                for (std::size_t b = 0; b <= a; ++b)
                    u.omega[k].add(a, b, 0.5 * r[k] * (r[a] * prefix_vec[k][b] + prefix_vec[k][a] * r[b]));
        for (std::size_t k = 0; k < k_len; ++k)
            for (std::size_t l = 0; l <= k; ++l) u.psi.add(k, l, r[k] * r[l] * prefix_sq(k, l));

        for (std::size_t k = 0; k < k_len; ++k)
            for (std::size_t a = 0; a < k_len; ++a) prefix_vec[k][a] += r[k] * r[a];
        prefix_sq.add_outer(r);
    }
    u.psi *= sigma2 * sigma2;
    return u;
}

void accumulate(GroupMoments& g, const UnitSums& u) {
    g.q += u.gram_over_sigma2;
    g.s += u.gram;
    g.w += u.w;
    for (std::size_t k = 0; k < g.omega.size(); ++k) g.omega[k] += u.omega[k];
}

/// Scales raw group sums into the large-T and fixed-T moments.
void finalize(GroupMoments& g, double units, double t) {
    const double inv_gt = 1.0 / (units * t);
    g.sigma_cap = g.s * (1.0 / units);
    for (std::size_t k = 0; k < g.omega.size(); ++k) g.u[k] = g.omega[k] * (1.0 / units);
    g.q *= inv_gt;
    g.s *= inv_gt;
    g.w *= inv_gt;
    for (auto& m : g.omega) m *= inv_gt / t;
}

void visit_matrices(MomentSpec& a, const MomentSpec& b, const std::function<void(SymMatrix&, const SymMatrix&)>& f) {
    auto group = [&](GroupMoments& ga, const GroupMoments& gb) {
        f(ga.q, gb.q);
        f(ga.s, gb.s);
        f(ga.w, gb.w);
        f(ga.sigma_cap, gb.sigma_cap);
        for (std::size_t k = 0; k < ga.omega.size(); ++k) f(ga.omega[k], gb.omega[k]);
        for (std::size_t k = 0; k < ga.u.size(); ++k) f(ga.u[k], gb.u[k]);
    };
    group(a.full, b.full);
    for (std::size_t p = 0; p < a.groups.size(); ++p) group(a.groups[p], b.groups[p]);
    f(a.psi, b.psi);
    f(a.curly_v, b.curly_v);
}

SymMatrix squared_entries(const SymMatrix& m) {
    SymMatrix out(m.dim());
    for (std::size_t i = 0; i < m.dim(); ++i)
        for (std::size_t j = 0; j <= i; ++j) out.set(i, j, m(i, j) * m(i, j));
    return out;
}

}  // namespace

MomentEstimate estimate_moments(const DgpConfig& cfg, std::size_t reps, std::uint64_t seed,
                                TransformKind transform) {
    if (reps == 0) throw ConfigError("reps must be at least 1");
    auto null_cfg = cfg;
    null_cfg.lambda = 0.0;
    null_cfg.validate();
    const std::size_t n_groups = std::max<std::size_t>(cfg.p, 2) - 1;

    constexpr std::size_t k_len = 1;  // the generator is single-regressor
    MomentSpec sum = zero_spec(k_len, n_groups), sum_sq = zero_spec(k_len, n_groups);
    double v0_sum = 0.0, v0_sq = 0.0, vhat_sum = 0.0;

    for (std::size_t rep = 0; rep < reps; ++rep) {
        const auto gen = generate_panel(null_cfg, seed, static_cast<std::uint32_t>(rep));
        const auto data = apply_transform(gen.data, transform);
        const auto n = data.n_units();
        const double t = static_cast<double>(data.n_periods());

        MomentSpec sample = zero_spec(k_len, n_groups);
        std::vector<double> group_units(n_groups, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double sigma2 = gen.params[i].sigma2;
            const auto u = unit_sums(data, i, sigma2);
            accumulate(sample.full, u);
            sample.psi += u.psi;
            const int g = gen.groups.assignment[i];
            if (g >= 2) {
                accumulate(sample.groups[g - 2], u);
                group_units[g - 2] += 1.0;
            }
        }
        finalize(sample.full, static_cast<double>(n), t);
        for (std::size_t p = 0; p < n_groups; ++p)
            if (group_units[p] > 0.0) finalize(sample.groups[p], group_units[p], t);
        sample.curly_v = sample.psi * (1.0 / static_cast<double>(n));
        sample.psi *= 1.0 / (static_cast<double>(n) * t * t);

        const auto j = sc_j_parts(data);
        const double numerator = j.lm_sc / std::sqrt(static_cast<double>(n)) - j.bias;
        v0_sum += numerator;
        v0_sq += numerator * numerator;
        vhat_sum += j.variance;

        visit_matrices(sum, sample, [](SymMatrix& acc, const SymMatrix& s) { acc += s; });
        visit_matrices(sum_sq, sample, [](SymMatrix& acc, const SymMatrix& s) { acc += squared_entries(s); });
    }

    const double r = static_cast<double>(reps);
    MomentEstimate est;
    est.reps = reps;
    est.mean = sum;
    visit_matrices(est.mean, sum, [&](SymMatrix& m, const SymMatrix&) { m *= 1.0 / r; });
    // entrywise standard error of the mean, zero for a single replication
    est.std_error = sum_sq;
    visit_matrices(est.std_error, est.mean, [&](SymMatrix& se, const SymMatrix& mean) {
        for (std::size_t i = 0; i < mean.dim(); ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                const double var = std::max(se(i, j) / r - mean(i, j) * mean(i, j), 0.0);
                se.set(i, j, reps > 1 ? std::sqrt(var / (r - 1.0)) : 0.0);
            }
    });

    if (reps > 1) {
        const double mean = v0_sum / r;
        const double var = (v0_sq - r * mean * mean) / (r - 1.0);
        est.mean.v0 = var;
        // standard error of a sample variance under normality
        est.std_error.v0 = var * std::sqrt(2.0 / (r - 1.0));
    } else {
        est.mean.v0 = vhat_sum;
        est.std_error.v0 = 0.0;
    }
    return est;
}

}  // namespace grouptest
