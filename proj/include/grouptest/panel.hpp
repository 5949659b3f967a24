#pragma once

// Balanced panel storage, group partitions and test result records.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "grouptest/errors.hpp"

namespace grouptest {

/// Balanced N x T x K panel. Storage is dense and unit-major:
/// y[i*T + t], x[(i*T + t)*K + k].
class PanelDataset {
public:
    PanelDataset() = default;

    /// Validates dimensions, finiteness and id uniqueness. Empty id vectors
    /// are replaced by positional labels "1".."N" / "1".."T".
    PanelDataset(std::size_t n_units, std::size_t n_periods, std::size_t n_regressors,
                 std::vector<double> y, std::vector<double> x,
                 std::vector<std::string> unit_ids = {},
                 std::vector<std::string> time_ids = {});

    std::size_t n_units() const noexcept { return n_; }
    std::size_t n_periods() const noexcept { return t_; }
    std::size_t n_regressors() const noexcept { return k_; }

    double y(std::size_t i, std::size_t t) const { return y_[i * t_ + t]; }
    double x(std::size_t i, std::size_t t, std::size_t k) const { return x_[(i * t_ + t) * k_ + k]; }

    std::span<const double> unit_y(std::size_t i) const {
        return {y_.data() + i * t_, t_};
    }
    /// T x K row-major block for unit i.
    std::span<const double> unit_x(std::size_t i) const {
        return {x_.data() + i * t_ * k_, t_ * k_};
    }
    /// Regressor row x_it (length K).
    std::span<const double> row(std::size_t i, std::size_t t) const {
        return {x_.data() + (i * t_ + t) * k_, k_};
    }

    const std::vector<double>& y_data() const noexcept { return y_; }
    const std::vector<double>& x_data() const noexcept { return x_; }
    const std::vector<std::string>& unit_ids() const noexcept { return unit_ids_; }
    const std::vector<std::string>& time_ids() const noexcept { return time_ids_; }

    /// Same shape and identifiers, y multiplied by c.
    PanelDataset scaled_response(double c) const;
    /// Units reordered so that unit j of the result is unit order[j] of this.
    PanelDataset permuted_units(std::span<const std::size_t> order) const;

    friend bool operator==(const PanelDataset&, const PanelDataset&) = default;

private:
    std::size_t n_ = 0;
    std::size_t t_ = 0;
    std::size_t k_ = 0;
    std::vector<double> y_;
    std::vector<double> x_;
    std::vector<std::string> unit_ids_;
    std::vector<std::string> time_ids_;
};

/// Partition of units into P groups. Labels are 1-based; group 1 is the
/// dominant group.
struct GroupSpec {
    std::size_t n_groups = 1;
    std::vector<int> assignment;
    std::vector<std::vector<double>> slopes;

    std::vector<std::size_t> group_sizes() const;
    /// Units outside group 1.
    std::size_t alternative_mass() const;
};

/// Throws LabelError for labels outside 1..P or a size mismatch with n,
/// PartitionError for an empty group.
void validate_group_spec(const GroupSpec& spec, std::size_t n);

enum class TestName { Swamy, Delta, ScJ, BrsLm };

enum class RefDist { StdNormalUpper, ChiSquared };

std::string to_string(TestName name);
TestName parse_test_name(const std::string& s);

struct TestResult {
    TestName test_name = TestName::Delta;
    double statistic = 0.0;
    double p_value = 1.0;
    RefDist dist = RefDist::StdNormalUpper;
    std::size_t df = 0;  // chi-squared degrees of freedom, 0 for normal
    bool reject = false;
    double alpha = 0.05;
};

/// Builds a result whose rejection flag is p < alpha (strict).
TestResult make_result(TestName name, double statistic, double p_value, RefDist dist,
                       std::size_t df, double alpha);

// CSV ingestion -------------------------------------------------------------

/// Reads `unit,time,y,x1,...,xK`. Rows may come in any order: units and
/// periods are each sorted numerically when every label parses as a number,
/// lexicographically otherwise.
PanelDataset load_panel_csv(const std::filesystem::path& path, std::size_t k);
PanelDataset parse_panel_csv(const std::string& text, std::size_t k);

/// Writes the same schema with 17 significant digits.
void write_panel_csv(const PanelDataset& data, const std::filesystem::path& path);
std::string format_panel_csv(const PanelDataset& data);

}  // namespace grouptest
