#include "grouptest/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "grouptest/rng.hpp"

namespace grouptest {

std::string to_string(DgpDesign d) {
    return d == DgpDesign::Clean ? "clean" : "ar1";
}

DgpDesign parse_design(const std::string& s) {
    if (s == "ar1" || s == "ar1_heteroskedastic") return DgpDesign::Ar1Heteroskedastic;
    if (s == "clean" || s == "iid") return DgpDesign::Clean;
    throw ConfigError("unknown design '" + s + "' (expected ar1 or clean)");
}

std::size_t DgpConfig::alternative_mass() const {
    if (!group_sizes.empty()) return std::accumulate(group_sizes.begin(), group_sizes.end(), std::size_t{0});
    return total_m.value_or(0);
}

void DgpConfig::validate() const {
    if (n == 0) throw ConfigError("n must be positive");
    if (t == 0) throw ConfigError("t must be positive");
    if (p == 0) throw ConfigError("p must be at least 1");
    if (!(h >= 0.0)) throw ConfigError("h must be non-negative");
    if (!std::isfinite(lambda) || !std::isfinite(base_beta)) throw ConfigError("lambda and base_beta must be finite");
    if (!group_sizes.empty()) {
        if (group_sizes.size() != p - 1)
            throw ConfigError("expected " + std::to_string(p - 1) + " alternative group sizes, got " +
                              std::to_string(group_sizes.size()));
        for (auto m : group_sizes)
            if (m == 0) throw ConfigError("alternative group sizes must be positive");
        if (total_m && *total_m != alternative_mass())
            throw ConfigError("total_m disagrees with the sum of group sizes");
    } else if (p > 1) {
        if (!total_m) throw ConfigError("alternative group sizes or total_m required when p > 1");
        if (*total_m < p - 1)
            throw ConfigError("total_m=" + std::to_string(*total_m) + " cannot fill " + std::to_string(p - 1) +
                              " nonempty alternative groups");
    } else if (total_m && *total_m != 0) {
        throw ConfigError("p = 1 admits no alternative units");
    }
    if (alternative_mass() >= n) throw ConfigError("the dominant group must be nonempty (M < N)");
}

std::vector<std::size_t> split_group_sizes(std::size_t total, std::size_t p, std::uint64_t seed,
                                           std::uint32_t rep) {
    if (p == 0) throw ConfigError("p must be at least 1");
    const std::size_t parts = p - 1;
    if (parts == 0) {
        if (total != 0) throw ConfigError("p = 1 admits no alternative units");
        return {};
    }
    if (total < parts)
        throw ConfigError("cannot split " + std::to_string(total) + " units into " + std::to_string(parts) +
                          " nonempty groups");

    // Stars and bars: a uniform (parts-1)-subset of the total-1 gaps gives a
    // uniform composition. Floyd's algorithm draws the subset.
    CounterStream rng(seed, rep, 0, StreamPurpose::GroupSplit);
    const std::size_t gaps = total - 1, cuts_needed = parts - 1;
    std::vector<std::size_t> cuts;
    cuts.reserve(cuts_needed);
    for (std::size_t j = gaps - cuts_needed; j < gaps; ++j) {
        const auto v = static_cast<std::size_t>(rng.below(j + 1)) + 1;  // 1..j+1
        if (std::find(cuts.begin(), cuts.end(), v) == cuts.end())
            cuts.push_back(v);
        else
            cuts.push_back(j + 1);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::size_t> sizes;
    sizes.reserve(parts);
    std::size_t prev = 0;
    for (auto c : cuts) {
        sizes.push_back(c - prev);
        prev = c;
    }
    sizes.push_back(total - prev);
    return sizes;
}

GeneratedPanel generate_panel(const DgpConfig& cfg, std::uint64_t seed, std::uint32_t rep) {
    cfg.validate();
    const std::size_t n = cfg.n, t_len = cfg.t;

    auto sizes = cfg.group_sizes;
    if (sizes.empty() && cfg.p > 1) sizes = split_group_sizes(*cfg.total_m, cfg.p, seed, rep);
    const std::size_t m = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});

    GroupSpec groups;
    groups.n_groups = cfg.p;
    groups.assignment.assign(n, 1);
    {
        std::size_t unit = n - m;
        for (std::size_t g = 0; g < sizes.size(); ++g)
            for (std::size_t j = 0; j < sizes[g]; ++j) groups.assignment[unit++] = static_cast<int>(g + 2);
    }
    if (cfg.shuffle) {
        CounterStream rng(seed, rep, 0, StreamPurpose::Shuffle);
        for (std::size_t i = n; i > 1; --i)
            std::swap(groups.assignment[i - 1], groups.assignment[rng.below(i)]);
    }

    CounterStream shift_rng(seed, rep, 0, StreamPurpose::GroupShift);
    groups.slopes.assign(cfg.p, std::vector<double>{cfg.base_beta});
    for (std::size_t g = 1; g < cfg.p; ++g) {
        const double e = -cfg.h + 2.0 * cfg.h * shift_rng.uniform();
        groups.slopes[g][0] = cfg.base_beta + cfg.lambda * (1.0 + e);
    }

    std::vector<double> y(n * t_len), x(n * t_len);
    std::vector<DgpUnitParams> params(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto unit = static_cast<std::uint32_t>(i);
        auto& par = params[i];
        par.beta = groups.slopes[groups.assignment[i] - 1][0];
        CounterStream x_rng(seed, rep, unit, StreamPurpose::Regressor);
        CounterStream e_rng(seed, rep, unit, StreamPurpose::Error);

        if (cfg.design == DgpDesign::Clean) {
            par.sigma2 = 1.0;
            par.sigma2_x = 1.0;
            par.rho = 0.0;
            par.alpha = 0.0;
            for (std::size_t t = 0; t < t_len; ++t) {
                const double xt = x_rng.normal();
                x[i * t_len + t] = xt;
                y[i * t_len + t] = xt * par.beta + e_rng.normal();
            }
            continue;
        }

        CounterStream p_rng(seed, rep, unit, StreamPurpose::UnitParams);
        par.sigma2 = 0.5 * p_rng.chi_squared(2);
        par.sigma2_x = p_rng.chi_squared(1);
        par.rho = p_rng.uniform(0.05, 0.95);
        par.alpha = 1.0 + p_rng.normal();

        const double innov_scale = std::sqrt(1.0 - par.rho * par.rho) * std::sqrt(par.sigma2_x);
        const double sigma = std::sqrt(par.sigma2);
        double prev = 0.0;
        for (std::size_t s = 0; s < cfg.burn_in + t_len; ++s) {
            const double xt = par.rho * prev + innov_scale * x_rng.normal();
            prev = xt;
            if (s < cfg.burn_in) continue;
            const std::size_t t = s - cfg.burn_in;
            x[i * t_len + t] = xt;
            y[i * t_len + t] = xt * par.beta + par.alpha + sigma * e_rng.normal();
        }
    }

    return {PanelDataset(n, t_len, 1, std::move(y), std::move(x)), std::move(groups), std::move(params)};
}

}  // namespace grouptest
