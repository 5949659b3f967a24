#include "grouptest/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace grouptest {

namespace {

std::vector<std::string> positional_ids(std::size_t n) {
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i + 1);
    return ids;
}

bool all_unique(const std::vector<std::string>& ids) {
    std::set<std::string> seen(ids.begin(), ids.end());
    return seen.size() == ids.size();
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

/// Numeric ordering when every label is a number, lexicographic otherwise.
std::vector<std::string> sorted_labels(const std::set<std::string>& labels) {
    std::vector<std::string> out(labels.begin(), labels.end());
    std::vector<double> keys(out.size());
    bool numeric = true;
    for (std::size_t i = 0; i < out.size() && numeric; ++i) numeric = parse_double(out[i], keys[i]);
    if (numeric) {
        std::vector<std::size_t> idx(out.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
            if (keys[a] != keys[b]) return keys[a] < keys[b];
            return out[a] < out[b];
        });
        std::vector<std::string> sorted;
        sorted.reserve(out.size());
        for (auto i : idx) sorted.push_back(out[i]);
        return sorted;
    }
    return out;
}

}  // namespace

PanelDataset::PanelDataset(std::size_t n_units, std::size_t n_periods, std::size_t n_regressors,
                           std::vector<double> y, std::vector<double> x,
                           std::vector<std::string> unit_ids,
                           std::vector<std::string> time_ids)
    : n_(n_units), t_(n_periods), k_(n_regressors), y_(std::move(y)), x_(std::move(x)),
      unit_ids_(std::move(unit_ids)), time_ids_(std::move(time_ids)) {
    if (n_ == 0 || t_ == 0 || k_ == 0)
        throw ConfigError("panel dimensions must be positive");
    if (y_.size() != n_ * t_) throw ConfigError("response size does not match N*T");
    if (x_.size() != n_ * t_ * k_) throw ConfigError("regressor size does not match N*T*K");
    if (unit_ids_.empty()) unit_ids_ = positional_ids(n_);
    if (time_ids_.empty()) time_ids_ = positional_ids(t_);
    if (unit_ids_.size() != n_ || time_ids_.size() != t_)
        throw ConfigError("identifier count does not match panel dimensions");
    if (!all_unique(unit_ids_)) throw DuplicateError("unit identifiers are not unique");
    if (!all_unique(time_ids_)) throw DuplicateError("time identifiers are not unique");
    for (double v : y_)
        if (!std::isfinite(v)) throw ParseError("non-finite response value", 0);
    for (double v : x_)
        if (!std::isfinite(v)) throw ParseError("non-finite regressor value", 0);
}

PanelDataset PanelDataset::scaled_response(double c) const {
    auto y = y_;
    for (auto& v : y) v *= c;
    return PanelDataset(n_, t_, k_, std::move(y), x_, unit_ids_, time_ids_);
}

PanelDataset PanelDataset::permuted_units(std::span<const std::size_t> order) const {
    if (order.size() != n_) throw ConfigError("permutation length does not match N");
    std::vector<double> y(y_.size()), x(x_.size());
    std::vector<std::string> ids(n_);
    for (std::size_t j = 0; j < n_; ++j) {
        const auto src = order[j];
        std::copy_n(y_.begin() + src * t_, t_, y.begin() + j * t_);
        std::copy_n(x_.begin() + src * t_ * k_, t_ * k_, x.begin() + j * t_ * k_);
        ids[j] = unit_ids_[src];
    }
    return PanelDataset(n_, t_, k_, std::move(y), std::move(x), std::move(ids), time_ids_);
}

std::vector<std::size_t> GroupSpec::group_sizes() const {
    std::vector<std::size_t> sizes(n_groups, 0);
    for (int g : assignment)
        if (g >= 1 && static_cast<std::size_t>(g) <= n_groups) ++sizes[g - 1];
    return sizes;
}

std::size_t GroupSpec::alternative_mass() const {
    return static_cast<std::size_t>(std::count_if(assignment.begin(), assignment.end(),
                                                  [](int g) { return g != 1; }));
}

void validate_group_spec(const GroupSpec& spec, std::size_t n) {
    if (spec.n_groups == 0) throw PartitionError("group count must be positive");
    if (spec.assignment.size() != n)
        throw LabelError("assignment has " + std::to_string(spec.assignment.size()) +
                         " entries, expected " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
        const int g = spec.assignment[i];
        if (g < 1 || static_cast<std::size_t>(g) > spec.n_groups)
            throw LabelError("unit " + std::to_string(i + 1) + " has label " + std::to_string(g) +
                             " outside 1.." + std::to_string(spec.n_groups));
    }
    if (!spec.slopes.empty() && spec.slopes.size() != spec.n_groups)
        throw LabelError("slope list length does not match group count");
    const auto sizes = spec.group_sizes();
    for (std::size_t p = 0; p < sizes.size(); ++p)
        if (sizes[p] == 0) throw PartitionError("group " + std::to_string(p + 1) + " is empty");
}

std::string to_string(TestName name) {
    switch (name) {
        case TestName::Swamy: return "swamy";
        case TestName::Delta: return "delta";
        case TestName::ScJ: return "sc_j";
        case TestName::BrsLm: return "brs_lm";
    }
    return "unknown";
}

TestName parse_test_name(const std::string& s) {
    if (s == "swamy") return TestName::Swamy;
    if (s == "delta") return TestName::Delta;
    if (s == "sc_j" || s == "j") return TestName::ScJ;
    if (s == "brs_lm" || s == "lm") return TestName::BrsLm;
    throw ConfigError("unknown test '" + s + "'");
}

TestResult make_result(TestName name, double statistic, double p_value, RefDist dist,
                       std::size_t df, double alpha) {
    TestResult r;
    r.test_name = name;
    r.statistic = statistic;
    r.p_value = std::clamp(p_value, 0.0, 1.0);
    r.dist = dist;
    r.df = df;
    r.alpha = alpha;
    r.reject = r.p_value < alpha;
    return r;
}

// ---------------------------------------------------------------------------

PanelDataset parse_panel_csv(const std::string& text, std::size_t k) {
    if (k == 0) throw ConfigError("k must be positive");
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    // header
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    const auto header = split_fields(line);
    if (header.size() != 3 + k)
        throw ParseError("header has " + std::to_string(header.size()) + " columns, expected " +
                             std::to_string(3 + k),
                         line_no);
    if (header[0] != "unit" || header[1] != "time" || header[2] != "y")
        throw ParseError("header must start with unit,time,y", line_no);
    for (std::size_t j = 0; j < k; ++j)
        if (header[3 + j] != "x" + std::to_string(j + 1))
            throw ParseError("expected column x" + std::to_string(j + 1), line_no);

    struct Row {
        std::string unit, time;
        std::vector<double> values;  // y, x1..xK
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != 3 + k)
            throw ParseError("row " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                                 " fields",
                             line_no);
        Row r{std::string(f[0]), std::string(f[1]), std::vector<double>(1 + k)};
        if (r.unit.empty() || r.time.empty())
            throw ParseError("row " + std::to_string(line_no) + " has an empty identifier", line_no);
        for (std::size_t j = 0; j <= k; ++j) {
            if (!parse_double(f[2 + j], r.values[j]) || !std::isfinite(r.values[j]))
                throw ParseError("row " + std::to_string(line_no) + ": non-numeric value '" +
                                     std::string(f[2 + j]) + "'",
                                 line_no);
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw BalanceError("panel has no observations");

    std::set<std::string> unit_set, time_set;
    for (const auto& r : rows) {
        unit_set.insert(r.unit);
        time_set.insert(r.time);
    }
    const auto units = sorted_labels(unit_set);
    const auto times = sorted_labels(time_set);
    std::unordered_map<std::string, std::size_t> unit_pos, time_pos;
    for (std::size_t i = 0; i < units.size(); ++i) unit_pos[units[i]] = i;
    for (std::size_t t = 0; t < times.size(); ++t) time_pos[times[t]] = t;

    const std::size_t n = units.size(), tt = times.size();
    std::vector<double> y(n * tt), x(n * tt * k);
    std::vector<char> seen(n * tt, 0);
    for (const auto& r : rows) {
        const auto i = unit_pos[r.unit], t = time_pos[r.time];
        const auto cell = i * tt + t;
        if (seen[cell])
            throw DuplicateError("duplicate observation for unit '" + r.unit + "', time '" + r.time +
                                 "'");
        seen[cell] = 1;
        y[cell] = r.values[0];
        std::copy(r.values.begin() + 1, r.values.end(), x.begin() + cell * k);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < tt; ++t)
            if (!seen[i * tt + t])
                throw BalanceError("unbalanced panel: unit '" + units[i] + "' has no observation for time '" +
                                   times[t] + "'");

    return PanelDataset(n, tt, k, std::move(y), std::move(x), units, times);
}

PanelDataset load_panel_csv(const std::filesystem::path& path, std::size_t k) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_panel_csv(ss.str(), k);
}

std::string format_panel_csv(const PanelDataset& data) {
    std::ostringstream out;
    out.precision(17);
    out << "unit,time,y";
    for (std::size_t k = 0; k < data.n_regressors(); ++k) out << ",x" << (k + 1);
    out << '\n';
    for (std::size_t i = 0; i < data.n_units(); ++i) {
        for (std::size_t t = 0; t < data.n_periods(); ++t) {
            out << data.unit_ids()[i] << ',' << data.time_ids()[t] << ',' << data.y(i, t);
            for (std::size_t k = 0; k < data.n_regressors(); ++k) out << ',' << data.x(i, t, k);
            out << '\n';
        }
    }
    return out.str();
}

void write_panel_csv(const PanelDataset& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << format_panel_csv(data);
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace grouptest
