#pragma once

// Small dense symmetric linear algebra and the distribution functions used
// for p-values and power.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "grouptest/errors.hpp"

namespace grouptest {

namespace tol {
/// Cholesky pivot threshold relative to the largest diagonal entry.
inline constexpr double kSingularPivot = 1e-12;
/// Eigenvalue floor relative to the largest eigenvalue for inverse roots.
inline constexpr double kEigenFloor = 1e-12;
/// Variance weights at or below this are rejected.
inline constexpr double kZeroVariance = 1e-12;
/// Poisson tail weight below which the noncentral chi-squared mixture stops.
inline constexpr double kPoissonTail = 1e-14;
/// Target accuracy of the CDFs.
inline constexpr double kCdfAccuracy = 1e-10;
/// Relative accuracy targets for solves and factorizations in tests.
inline constexpr double kSolve = 1e-10;
}  // namespace tol

/// Symmetric dim x dim matrix with full storage; set() mirrors so the two
/// triangles are always bit-identical.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t dim) : dim_(dim), a_(dim * dim, 0.0) {}
    /// Row-major nested list; only the lower triangle is read.
    SymMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static SymMatrix identity(std::size_t dim);
    static SymMatrix diagonal(std::span<const double> d);

    std::size_t dim() const noexcept { return dim_; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }
    void set(std::size_t i, std::size_t j, double v) {
        a_[i * dim_ + j] = v;
        a_[j * dim_ + i] = v;
    }
    /// a(i,j) += v and mirror; on the diagonal adds once.
    void add(std::size_t i, std::size_t j, double v) {
        a_[i * dim_ + j] += v;
        if (i != j) a_[j * dim_ + i] += v;
    }
    /// this += w * v v'
    void add_outer(std::span<const double> v, double w = 1.0);

    SymMatrix& operator+=(const SymMatrix& o);
    SymMatrix& operator*=(double c);
    friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
    friend SymMatrix operator*(SymMatrix a, double c) { return a *= c; }

    std::vector<double> multiply(std::span<const double> v) const;
    double quad_form(std::span<const double> v) const;
    double max_diagonal() const;

    std::span<const double> data() const noexcept { return a_; }

    friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> a_;
};

/// Lower Cholesky factor, row-major dim x dim.
struct Cholesky {
    std::size_t dim = 0;
    std::vector<double> lower;

    std::vector<double> solve(std::span<const double> b) const;
};

/// Throws SingularError with the failing pivot index when a pivot falls
/// below kSingularPivot times the largest diagonal entry.
Cholesky cholesky(const SymMatrix& a);

/// Solves a z = b for symmetric positive definite a.
std::vector<double> spd_solve(const SymMatrix& a, std::span<const double> b);

struct SymEigen {
    std::vector<double> values;   // ascending
    std::vector<double> vectors;  // column j is the eigenvector of values[j]; row-major dim x dim
};

/// Cyclic Jacobi sweeps; intended for dim <= ~10.
SymEigen sym_eigen(const SymMatrix& a);

/// R with R a R = I. Throws SingularError when an eigenvalue is at or below
/// kEigenFloor times the largest.
SymMatrix sym_inv_sqrt(const SymMatrix& a);

// Distributions --------------------------------------------------------------

double std_normal_cdf(double z);
/// 1 - Phi(z) without cancellation.
double std_normal_sf(double z);
double std_normal_quantile(double p);

/// Regularized lower / upper incomplete gamma P(a, x), Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double chisq_cdf(double x, double df);
double chisq_sf(double x, double df);
double chisq_quantile(double p, double df);

double noncentral_chisq_cdf(double x, double df, double ncp);
double noncentral_chisq_sf(double x, double df, double ncp);

}  // namespace grouptest
