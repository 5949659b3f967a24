#pragma once

// Unit-level OLS, pooled OLS and variance-weighted least squares.

#include <cstddef>
#include <span>
#include <vector>

#include "grouptest/numkern.hpp"
#include "grouptest/panel.hpp"

namespace grouptest {

struct UnitFit {
    std::vector<double> beta;      // K
    std::vector<double> resid;     // T
    double sigma2_hat = 0.0;       // resid'resid / (T-K-1)
    SymMatrix gram;                // x_i'x_i
    std::vector<double> hat_diag;  // h_{i,tt}
};

struct PooledFit {
    std::vector<double> beta_ls;       // K
    std::vector<double> resid;         // N*T, unit-major
    std::vector<double> sigma2_tilde;  // N; empty when T <= K+1
};

/// Cross-product x_i'x_i.
SymMatrix unit_gram(const PanelDataset& data, std::size_t i);
/// x_i'y_i.
std::vector<double> unit_moment(const PanelDataset& data, std::size_t i);

/// Throws DegenerateError when T <= K+1 and SingularError for a singular gram.
UnitFit unit_ols(const PanelDataset& data, std::size_t i);

/// Pooled slope and residuals without the per-unit variance. Needs only a
/// nonsingular pooled gram, so it also serves short transformed panels.
PooledFit pooled_residuals(const PanelDataset& data);

/// pooled_residuals plus sigma2_tilde; requires T > K+1.
PooledFit pooled_ols(const PanelDataset& data);

/// (sum x_i'x_i / w_i)^{-1} (sum x_i'y_i / w_i).
std::vector<double> wls(const PanelDataset& data, std::span<const double> weights);

}  // namespace grouptest
