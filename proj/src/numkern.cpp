#include "grouptest/numkern.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace grouptest {

SymMatrix::SymMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : dim_(rows.size()), a_(rows.size() * rows.size(), 0.0) {
    std::size_t i = 0;
    for (const auto& r : rows) {
        if (r.size() != dim_) throw ConfigError("SymMatrix rows must be square");
        std::size_t j = 0;
        for (double v : r) {
            if (j <= i) set(i, j, v);
            ++j;
        }
        ++i;
    }
}

SymMatrix SymMatrix::identity(std::size_t dim) {
    SymMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m.set(i, i, 1.0);
    return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
    SymMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m.set(i, i, d[i]);
    return m;
}

void SymMatrix::add_outer(std::span<const double> v, double w) {
    for (std::size_t i = 0; i < dim_; ++i) {
        const double wi = w * v[i];
        for (std::size_t j = 0; j <= i; ++j) add(i, j, wi * v[j]);
    }
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

SymMatrix& SymMatrix::operator*=(double c) {
    for (auto& v : a_) v *= c;
    return *this;
}

std::vector<double> SymMatrix::multiply(std::span<const double> v) const {
    std::vector<double> out(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) s += a_[i * dim_ + j] * v[j];
        out[i] = s;
    }
    return out;
}

double SymMatrix::quad_form(std::span<const double> v) const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j) s += v[i] * a_[i * dim_ + j] * v[j];
    return s;
}

double SymMatrix::max_diagonal() const {
    double m = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) m = std::max(m, a_[i * dim_ + i]);
    return m;
}

// ---------------------------------------------------------------------------

Cholesky cholesky(const SymMatrix& a) {
    const std::size_t n = a.dim();
    Cholesky c{n, std::vector<double>(n * n, 0.0)};
    auto& l = c.lower;
    const double threshold = tol::kSingularPivot * a.max_diagonal();
    for (std::size_t j = 0; j < n; ++j) {
        double pivot = a(j, j);
        for (std::size_t p = 0; p < j; ++p) pivot -= l[j * n + p] * l[j * n + p];
        if (!(pivot > threshold) || !(pivot > 0.0))
            throw SingularError("matrix is singular or indefinite at pivot " + std::to_string(j), j);
        const double d = std::sqrt(pivot);
        l[j * n + j] = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t p = 0; p < j; ++p) s -= l[i * n + p] * l[j * n + p];
            l[i * n + j] = s / d;
        }
    }
    return c;
}

std::vector<double> Cholesky::solve(std::span<const double> b) const {
    const std::size_t n = dim;
    std::vector<double> z(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        double s = z[i];
        for (std::size_t p = 0; p < i; ++p) s -= lower[i * n + p] * z[p];
        z[i] = s / lower[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = z[i];
        for (std::size_t p = i + 1; p < n; ++p) s -= lower[p * n + i] * z[p];
        z[i] = s / lower[i * n + i];
    }
    return z;
}

std::vector<double> spd_solve(const SymMatrix& a, std::span<const double> b) {
    if (b.size() != a.dim()) throw ConfigError("spd_solve: dimension mismatch");
    return cholesky(a).solve(b);
}

SymEigen sym_eigen(const SymMatrix& a) {
    const std::size_t n = a.dim();
    std::vector<double> m(a.data().begin(), a.data().end());
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0, total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                total += m[i * n + j] * m[i * n + j];
                if (i != j) off += m[i * n + j] * m[i * n + j];
            }
        if (off <= 1e-32 * total || off == 0.0) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = m[p * n + q];
                if (apq == 0.0) continue;
                const double theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double mkp = m[k * n + p], mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double mpk = m[p * n + k], mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k * n + p], vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return m[x * n + x] < m[y * n + y]; });
    SymEigen out{std::vector<double>(n), std::vector<double>(n * n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = m[order[j] * n + order[j]];
        for (std::size_t i = 0; i < n; ++i) out.vectors[i * n + j] = v[i * n + order[j]];
    }
    return out;
}

SymMatrix sym_inv_sqrt(const SymMatrix& a) {
    const std::size_t n = a.dim();
    const auto eig = sym_eigen(a);
    const double largest = eig.values.empty() ? 0.0 : eig.values.back();
    std::vector<double> scale(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (!(eig.values[j] > tol::kEigenFloor * largest) || !(largest > 0.0))
            throw SingularError("eigenvalue " + std::to_string(j) + " is not positive", j);
        scale[j] = 1.0 / std::sqrt(eig.values[j]);
    }
    SymMatrix r(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k <= i; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                s += eig.vectors[i * n + j] * scale[j] * eig.vectors[k * n + j];
            r.set(i, k, s);
        }
    return r;
}

// ---------------------------------------------------------------------------

double std_normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double std_normal_sf(double z) {
    return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

double std_normal_quantile(double p) {
    if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
    if (!(p < 1.0)) return std::numeric_limits<double>::infinity();

    // Acklam's rational approximation, then one Halley step.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // refine against whichever tail is smaller to avoid cancellation
    const double e = (p < 0.5) ? std_normal_cdf(x) - p : (1.0 - p) - std_normal_sf(x);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

namespace {

constexpr int kMaxGammaIter = 100000;
constexpr double kGammaEps = 1e-16;

double gamma_prefactor(double a, double x) {
    return std::exp(a * std::log(x) - x - std::lgamma(a));
}

// P(a,x) by power series, valid for x < a + 1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < kMaxGammaIter; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kGammaEps) break;
    }
    return sum * gamma_prefactor(a, x);
}

// Q(a,x) by modified Lentz continued fraction, valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxGammaIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kGammaEps) break;
    }
    return gamma_prefactor(a, x) * h;
}

}  // namespace

double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) return std::clamp(gamma_p_series(a, x), 0.0, 1.0);
    return std::clamp(1.0 - gamma_q_fraction(a, x), 0.0, 1.0);
}

double gamma_q(double a, double x) {
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return std::clamp(1.0 - gamma_p_series(a, x), 0.0, 1.0);
    return std::clamp(gamma_q_fraction(a, x), 0.0, 1.0);
}

double chisq_cdf(double x, double df) {
    if (df <= 0.0) return x >= 0.0 ? 1.0 : 0.0;
    return gamma_p(0.5 * df, 0.5 * x);
}

double chisq_sf(double x, double df) {
    if (df <= 0.0) return x > 0.0 ? 0.0 : 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

double chisq_quantile(double p, double df) {
    if (!(p > 0.0)) return 0.0;
    if (!(p < 1.0)) return std::numeric_limits<double>::infinity();
    double lo = 0.0, hi = std::max(1.0, df);
    while (chisq_cdf(hi, df) < p) {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chisq_cdf(mid, df) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

/// Poisson(mean)-weighted mixture of central terms f(df + 2j), summed outward
/// from the mode until the unvisited Poisson mass is below kPoissonTail.
template <class Term>
double poisson_mixture(double mean, Term term) {
    const auto mode = static_cast<long>(std::floor(mean));
    const double log_w0 = -mean + mode * std::log(mean) - std::lgamma(mode + 1.0);
    const double w0 = std::exp(log_w0);

    double sum = w0 * term(mode);
    double mass = w0;

    double w = w0;
    for (long j = mode - 1; j >= 0; --j) {
        w *= (j + 1) / mean;
        sum += w * term(j);
        mass += w;
        if (w < tol::kPoissonTail * 1e-3) break;
    }
    w = w0;
    for (long j = mode + 1; 1.0 - mass >= tol::kPoissonTail; ++j) {
        w *= mean / j;
        sum += w * term(j);
        mass += w;
        if (w == 0.0) break;
    }
    return sum;
}

}  // namespace

double noncentral_chisq_cdf(double x, double df, double ncp) {
    if (x <= 0.0) return 0.0;
    if (ncp <= 0.0) return chisq_cdf(x, df);
    const double v = poisson_mixture(0.5 * ncp, [&](long j) { return chisq_cdf(x, df + 2.0 * j); });
    return std::clamp(v, 0.0, 1.0);
}

double noncentral_chisq_sf(double x, double df, double ncp) {
    if (x <= 0.0) return 1.0;
    if (ncp <= 0.0) return chisq_sf(x, df);
    const double v = poisson_mixture(0.5 * ncp, [&](long j) { return chisq_sf(x, df + 2.0 * j); });
    return std::clamp(v, 0.0, 1.0);
}

}  // namespace grouptest
