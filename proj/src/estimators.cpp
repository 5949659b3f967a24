#include "grouptest/estimators.hpp"

#include <string>

namespace grouptest {

namespace {

void require_residual_dof(const PanelDataset& data) {
    if (data.n_periods() <= data.n_regressors() + 1)
        throw DegenerateError("insufficient periods: T=" + std::to_string(data.n_periods()) +
                              " must exceed K+1=" + std::to_string(data.n_regressors() + 1));
}

double residual_dof(const PanelDataset& data) {
    return static_cast<double>(data.n_periods() - data.n_regressors() - 1);
}

}  // namespace

SymMatrix unit_gram(const PanelDataset& data, std::size_t i) {
    SymMatrix g(data.n_regressors());
    for (std::size_t t = 0; t < data.n_periods(); ++t) g.add_outer(data.row(i, t));
    return g;
}

std::vector<double> unit_moment(const PanelDataset& data, std::size_t i) {
    const auto k_len = data.n_regressors();
    std::vector<double> m(k_len, 0.0);
    for (std::size_t t = 0; t < data.n_periods(); ++t) {
        const auto r = data.row(i, t);
        const double yt = data.y(i, t);
        for (std::size_t k = 0; k < k_len; ++k) m[k] += r[k] * yt;
    }
    return m;
}

UnitFit unit_ols(const PanelDataset& data, std::size_t i) {
    require_residual_dof(data);
    const auto t_len = data.n_periods(), k_len = data.n_regressors();

    UnitFit fit;
    fit.gram = unit_gram(data, i);
    const auto chol = cholesky(fit.gram);
    fit.beta = chol.solve(unit_moment(data, i));
    fit.resid.resize(t_len);
    fit.hat_diag.resize(t_len);
    double ssr = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
        const auto r = data.row(i, t);
        double fitted = 0.0;
        for (std::size_t k = 0; k < k_len; ++k) fitted += r[k] * fit.beta[k];
        fit.resid[t] = data.y(i, t) - fitted;
        ssr += fit.resid[t] * fit.resid[t];
        const auto z = chol.solve(r);
        double h = 0.0;
        for (std::size_t k = 0; k < k_len; ++k) h += r[k] * z[k];
        fit.hat_diag[t] = h;
    }
    fit.sigma2_hat = ssr / residual_dof(data);
    return fit;
}

PooledFit pooled_residuals(const PanelDataset& data) {
    const auto n = data.n_units(), t_len = data.n_periods(), k_len = data.n_regressors();
    SymMatrix gram(k_len);
    std::vector<double> moment(k_len, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        gram += unit_gram(data, i);
        const auto m = unit_moment(data, i);
        for (std::size_t k = 0; k < k_len; ++k) moment[k] += m[k];
    }
    PooledFit fit;
    fit.beta_ls = spd_solve(gram, moment);
    fit.resid.resize(n * t_len);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < t_len; ++t) {
            const auto r = data.row(i, t);
            double fitted = 0.0;
            for (std::size_t k = 0; k < k_len; ++k) fitted += r[k] * fit.beta_ls[k];
            fit.resid[i * t_len + t] = data.y(i, t) - fitted;
        }
    return fit;
}

PooledFit pooled_ols(const PanelDataset& data) {
    require_residual_dof(data);
    auto fit = pooled_residuals(data);
    const auto n = data.n_units(), t_len = data.n_periods();
    const double dof = residual_dof(data);
    fit.sigma2_tilde.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double ssr = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) ssr += fit.resid[i * t_len + t] * fit.resid[i * t_len + t];
        fit.sigma2_tilde[i] = ssr / dof;
    }
    return fit;
}

std::vector<double> wls(const PanelDataset& data, std::span<const double> weights) {
    const auto n = data.n_units(), k_len = data.n_regressors();
    if (weights.size() != n) throw ConfigError("wls: one variance weight per unit required");
    SymMatrix gram(k_len);
    std::vector<double> moment(k_len, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(weights[i] > tol::kZeroVariance))
            throw DegenerateError("zero variance weight for unit " + data.unit_ids()[i]);
        const double inv = 1.0 / weights[i];
        gram += unit_gram(data, i) * inv;
        const auto m = unit_moment(data, i);
        for (std::size_t k = 0; k < k_len; ++k) moment[k] += m[k] * inv;
    }
    return spd_solve(gram, moment);
}

}  // namespace grouptest
