#pragma once

// Synthetic grouped-slope panels for Monte Carlo work.
//
//   y_it = x_it beta_i + alpha_i + e_it,  e_it ~ N(0, sigma_i^2)
//   x_it = rho_i x_i,t-1 + sqrt(1 - rho_i^2) v_it,  v_it ~ N(0, sigma_ix^2)
//
// with sigma_i^2 ~ chi2(2)/2, sigma_ix^2 ~ chi2(1), rho_i ~ U(0.05, 0.95),
// alpha_i ~ N(1, 1). The first burn_in values of x are discarded. Units in
// group 1 get base_beta, units in group p >= 2 get base_beta + lambda (1 + e_p)
// with e_p ~ U(-h, h) drawn once per group.
//
// The Clean design replaces all of that with x_it ~ N(0,1), sigma_i^2 = 1 and
// no intercept, which is the setting where the asymptotic moments are known.

#include <cstdint>
#include <optional>
#include <vector>

#include "grouptest/panel.hpp"

namespace grouptest {

enum class DgpDesign { Ar1Heteroskedastic, Clean };

std::string to_string(DgpDesign d);
DgpDesign parse_design(const std::string& s);

struct DgpConfig {
    std::size_t n = 100;
    std::size_t t = 100;
    std::size_t p = 2;
    /// Sizes M_2..M_P. Left empty when total_m drives a random split.
    std::vector<std::size_t> group_sizes;
    /// Total alternative mass; used with a per-replication random split when
    /// group_sizes is empty.
    std::optional<std::size_t> total_m;
    double lambda = 0.0;
    double h = 0.0;
    std::size_t burn_in = 50;
    double base_beta = 1.0;
    DgpDesign design = DgpDesign::Ar1Heteroskedastic;
    /// Randomly permute group labels across units instead of placing the
    /// alternative groups last.
    bool shuffle = false;

    /// Alternative mass M (sum of group_sizes or total_m).
    std::size_t alternative_mass() const;
    /// Throws ConfigError when an invariant fails.
    void validate() const;
};

struct DgpUnitParams {
    double sigma2 = 1.0;
    double sigma2_x = 1.0;
    double rho = 0.0;
    double alpha = 0.0;
    double beta = 1.0;
};

struct GeneratedPanel {
    PanelDataset data;
    GroupSpec groups;
    std::vector<DgpUnitParams> params;
};

/// Uniform composition of total into parts-many positive integers.
std::vector<std::size_t> split_group_sizes(std::size_t total, std::size_t p, std::uint64_t seed,
                                           std::uint32_t rep);

/// K = 1 panel; a pure function of (cfg, seed, rep).
GeneratedPanel generate_panel(const DgpConfig& cfg, std::uint64_t seed, std::uint32_t rep);

}  // namespace grouptest
