#pragma once

// Monte Carlo experiment runner: replications of the grouped-slope DGP, each
// passed through the configured test suite, reduced to rejection counts.
// Replication r of a design point is a pure function of (seed, r), so counts
// do not depend on the worker count or scheduling.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "grouptest/dgp.hpp"
#include "grouptest/slope_tests.hpp"

namespace grouptest {

enum class SweepVariable { M2, Lambda, TotalM, P, T };

std::string to_string(SweepVariable v);
SweepVariable parse_sweep_variable(const std::string& s);

struct Sweep {
    SweepVariable variable = SweepVariable::M2;
    std::vector<double> values;
};

struct ExperimentConfig {
    DgpConfig dgp;
    std::optional<Sweep> sweep;
    std::size_t reps = 1000;
    std::uint64_t seed = 1;
    SlopeTestSuite tests{0.05, {TestName::Delta, TestName::ScJ, TestName::BrsLm}, {}, WlsWeighting::Consistent};
    std::filesystem::path output;  // results CSV; empty disables persistence
    std::size_t workers = 1;

    double alpha() const { return tests.alpha; }
    /// Throws ConfigError on any invalid field, including every sweep point.
    void validate() const;
    /// One config per sweep value (sweep cleared), or just this config.
    std::vector<ExperimentConfig> design_points() const;
};

nlohmann::ordered_json experiment_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::filesystem::path& path);

struct TestOutcome {
    TestName test = TestName::Delta;
    bool ok = false;
    double statistic = 0.0;
    bool reject = false;
    std::string error;
};

/// Throws IndexError when rep >= cfg.reps. Uses cfg.dgp as is; sweeps are
/// expanded by run_experiment.
std::vector<TestOutcome> run_replication(const ExperimentConfig& cfg, std::size_t rep);

struct PowerRow {
    std::size_t n = 0, t = 0, k = 1, p = 2, m_total = 0;
    double lambda = 0.0, h = 0.0;
    std::string transform;
    std::string test;
    std::size_t reps = 0;
    std::size_t n_reject = 0;
    std::size_t n_errors = 0;
    double rejection_rate = 0.0;
    double mc_std_err = 0.0;
    std::uint64_t seed = 0;
    double elapsed_s = 0.0;

    /// Identity of the design point and test, used to resume a results file.
    std::string key() const;
};

inline constexpr const char* kResultsHeader =
    "N,T,K,P,M_total,lambda,h,transform,test,reps,n_reject,n_errors,rejection_rate,mc_std_err,seed,elapsed_s";

std::string format_row(const PowerRow& row);
PowerRow parse_row(const std::string& line);
std::vector<PowerRow> read_results(const std::filesystem::path& path);

/// Rejection counts for one design point (cfg.sweep ignored), one row per
/// selected test.
std::vector<PowerRow> run_design_point(const ExperimentConfig& point);

/// Runs every design point. With cfg.output set, rows are appended and
/// flushed as each point completes, and points whose rows are already in the
/// file are skipped.
std::vector<PowerRow> run_experiment(const ExperimentConfig& cfg);

/// Power curves per test ordered by the swept variable (or by M_total when
/// there is no sweep), with detectability-boundary annotations and the
/// sqrt(N) group-size marker. Throws EmptyError on no rows.
nlohmann::ordered_json summarize(const std::vector<PowerRow>& rows,
                                 std::optional<SweepVariable> sweep = std::nullopt);

/// Share of failed replications above which the summary flags a row.
inline constexpr double kErrorFlagShare = 0.01;

}  // namespace grouptest
