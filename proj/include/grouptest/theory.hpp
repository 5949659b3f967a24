#pragma once

// Local power under grouped alternatives: detectability boundary,
// noncentrality parameters of the limiting distributions and the matching
// asymptotic power, plus a Monte Carlo estimator of the probability-limit
// moment matrices they depend on.

#include <cstdint>
#include <vector>

#include "grouptest/dgp.hpp"
#include "grouptest/numkern.hpp"
#include "grouptest/panel.hpp"
#include "grouptest/transforms.hpp"

namespace grouptest {

enum class Regime { LargeT, FixedT };

std::string to_string(Regime r);
Regime parse_regime(const std::string& s);

/// Moments of one set of units G.
///   q     = (#G T)^{-1} sum x_i'x_i / sigma_i^2
///   s     = (#G T)^{-1} sum x_i'x_i
///   w     = (#G T)^{-1} sum_t x_it x_it' (1 - h_i,tt)
///   omega = (#G T^2)^{-1} sum_{s<t} x_it,k x_it x_is,k x_is'   (one per k)
/// Fixed-T counterparts drop the T scaling:
///   sigma_cap = (#G)^{-1} sum x_i'x_i,  u = (#G)^{-1} sum_{s<t} x_it,k x_it x_is,k x_is'
struct GroupMoments {
    SymMatrix q, s, w;
    std::vector<SymMatrix> omega;
    SymMatrix sigma_cap;
    std::vector<SymMatrix> u;
};

struct MomentSpec {
    std::size_t k = 1;
    GroupMoments full;                  // all units
    std::vector<GroupMoments> groups;   // alternative groups G_2..G_P
    SymMatrix psi;                      // (N T^2)^{-1} sum sigma^4 ...
    SymMatrix curly_v;                  // fixed-T analogue of psi
    double v0 = 0.0;                    // variance of the J numerator under the null

    /// Builds a K = 1 spec where every matrix of every group is the given scalar.
    static MomentSpec scalar(double q, double s, double w, double omega, double psi, double v0,
                             std::size_t n_groups = 1);
    void validate() const;
};

/// Alternative groups p = 2..P: slope shifts lambda_p, shares m_p and
/// local constants c_p (c_p^2 is the limit of M_p T / (sqrt(N) gamma^2)).
struct LocalAlternative {
    std::vector<std::vector<double>> lambdas;
    std::vector<double> m;
    std::vector<double> c;

    static LocalAlternative two_group(std::vector<double> lambda, double m0, double c);
    double m0() const;
    void validate(std::size_t k) const;
};

/// sqrt(M T) / N^{1/4} for large T, sqrt(M) / N^{1/4} for fixed T.
double boundary_gamma(double n, double t, double m, Regime regime);

/// Finite-design plug-ins: m0 = M/N and c^2 = M T / (sqrt(N) gamma^2)
/// (T replaced by 1 in the fixed-T regime).
double plugin_m0(double n, double m);
double plugin_c(double n, double t, double m, double gamma, Regime regime);

double noncentrality_delta(const MomentSpec& ms, const LocalAlternative& alt);
double noncentrality_j(const MomentSpec& ms, const LocalAlternative& alt);

struct LmNoncentrality {
    std::vector<double> delta;
    double ncp = 0.0;
};
LmNoncentrality noncentrality_lm(const MomentSpec& ms, const LocalAlternative& alt,
                                 Regime regime = Regime::LargeT);

struct MultigroupNoncentrality {
    double delta = 0.0;
    double j = 0.0;
    LmNoncentrality lm;
};
/// Double sums over alternative groups p, q; with a single group this is
/// exactly the two-group calculation.
MultigroupNoncentrality noncentrality_multigroup(const MomentSpec& ms, const LocalAlternative& alt,
                                                 Regime regime = Regime::LargeT);

/// Delta and J: 1 - Phi(z_{1-alpha} - delta). LM: upper tail of the
/// noncentral chi-squared with K df at the central 1-alpha quantile.
/// Swamy has no local power result and is rejected.
double asymptotic_power(TestName test, double noncentrality, std::size_t k, double alpha);

struct MomentEstimate {
    MomentSpec mean;
    MomentSpec std_error;
    std::size_t reps = 0;
};

/// Monte Carlo averages of the finite-sample moment quantities under the
/// null (lambda is ignored), taken after the given transform. The
/// alternative groups are read from the generated GroupSpec. v0 is the
/// across-replication variance of N^{-1/2} LM_SC - B_NT; with a single
/// replication it falls back to the average V_NT.
MomentEstimate estimate_moments(const DgpConfig& cfg, std::size_t reps, std::uint64_t seed,
                                TransformKind transform = TransformKind::None);

}  // namespace grouptest
