#include "grouptest/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "grouptest/theory.hpp"

namespace grouptest {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(SweepVariable v) {
    switch (v) {
        case SweepVariable::M2: return "m2";
        case SweepVariable::Lambda: return "lambda";
        case SweepVariable::TotalM: return "total_m";
        case SweepVariable::P: return "p";
        case SweepVariable::T: return "t";
    }
    return "unknown";
}

SweepVariable parse_sweep_variable(const std::string& s) {
    if (s == "m2") return SweepVariable::M2;
    if (s == "lambda") return SweepVariable::Lambda;
    if (s == "total_m" || s == "m_total" || s == "m-total") return SweepVariable::TotalM;
    if (s == "p") return SweepVariable::P;
    if (s == "t") return SweepVariable::T;
    throw ConfigError("unknown sweep variable '" + s + "' (expected m2, lambda, total_m, p or t)");
}

namespace {

std::size_t as_count(double v, SweepVariable var) {
    if (!(v >= 0.0) || v != std::floor(v))
        throw ConfigError("sweep over " + to_string(var) + " needs non-negative integers, got " +
                          std::to_string(v));
    return static_cast<std::size_t>(v);
}

DgpConfig apply_sweep_value(DgpConfig d, SweepVariable var, double value) {
    switch (var) {
        case SweepVariable::M2:
            d.p = 2;
            d.group_sizes = {as_count(value, var)};
            d.total_m.reset();
            break;
        case SweepVariable::Lambda: d.lambda = value; break;
        case SweepVariable::TotalM:
            d.group_sizes.clear();
            d.total_m = as_count(value, var);
            break;
        case SweepVariable::P:
            d.p = as_count(value, var);
            if (!d.group_sizes.empty()) {
                d.total_m = d.alternative_mass();
                d.group_sizes.clear();
            }
            break;
        case SweepVariable::T: d.t = as_count(value, var); break;
    }
    return d;
}

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

}  // namespace

void ExperimentConfig::validate() const {
    if (reps == 0) throw ConfigError("reps must be at least 1");
    if (workers == 0) throw ConfigError("workers must be at least 1");
    tests.validate();
    if (sweep && sweep->values.empty()) throw ConfigError("sweep has no values");
    for (const auto& point : design_points()) point.dgp.validate();
}

std::vector<ExperimentConfig> ExperimentConfig::design_points() const {
    if (!sweep) return {*this};
    std::vector<ExperimentConfig> out;
    for (double v : sweep->values) {
        auto point = *this;
        point.sweep.reset();
        point.dgp = apply_sweep_value(dgp, sweep->variable, v);
        out.push_back(std::move(point));
    }
    return out;
}

// JSON ----------------------------------------------------------------------

ordered_json experiment_to_json(const ExperimentConfig& cfg) {
    ordered_json d;
    d["n"] = cfg.dgp.n;
    d["t"] = cfg.dgp.t;
    d["p"] = cfg.dgp.p;
    d["group_sizes"] = cfg.dgp.group_sizes;
    if (cfg.dgp.total_m)
        d["total_m"] = *cfg.dgp.total_m;
    else
        d["total_m"] = nullptr;
    d["lambda"] = cfg.dgp.lambda;
    d["h"] = cfg.dgp.h;
    d["burn_in"] = cfg.dgp.burn_in;
    d["base_beta"] = cfg.dgp.base_beta;
    d["design"] = to_string(cfg.dgp.design);
    d["shuffle"] = cfg.dgp.shuffle;

    ordered_json j;
    j["dgp"] = d;
    if (cfg.sweep)
        j["sweep"] = {{"variable", to_string(cfg.sweep->variable)}, {"values", cfg.sweep->values}};
    else
        j["sweep"] = nullptr;
    j["reps"] = cfg.reps;
    j["alpha"] = cfg.tests.alpha;
    j["seed"] = cfg.seed;
    ordered_json tests = ordered_json::array();
    ordered_json transforms = ordered_json::object();
    for (auto t : cfg.tests.ordered_tests()) {
        tests.push_back(to_string(t));
        transforms[to_string(t)] = to_string(cfg.tests.transform_for(t));
    }
    j["tests"] = tests;
    j["transforms"] = transforms;
    j["wls_weights"] = to_string(cfg.tests.wls_weighting);
    j["output"] = cfg.output.string();
    j["workers"] = cfg.workers;
    return j;
}

ExperimentConfig experiment_from_json(const json& j) {
    try {
        ExperimentConfig cfg;
        const auto& d = j.at("dgp");
        cfg.dgp.n = d.at("n").get<std::size_t>();
        cfg.dgp.t = d.at("t").get<std::size_t>();
        cfg.dgp.p = d.value("p", std::size_t{2});
        cfg.dgp.group_sizes = d.value("group_sizes", std::vector<std::size_t>{});
        if (d.contains("total_m") && !d["total_m"].is_null()) cfg.dgp.total_m = d["total_m"].get<std::size_t>();
        cfg.dgp.lambda = d.value("lambda", 0.0);
        cfg.dgp.h = d.value("h", 0.0);
        cfg.dgp.burn_in = d.value("burn_in", std::size_t{50});
        cfg.dgp.base_beta = d.value("base_beta", 1.0);
        cfg.dgp.design = parse_design(d.value("design", std::string("ar1")));
        cfg.dgp.shuffle = d.value("shuffle", false);

        if (j.contains("sweep") && !j["sweep"].is_null()) {
            Sweep s;
            s.variable = parse_sweep_variable(j["sweep"].at("variable").get<std::string>());
            s.values = j["sweep"].at("values").get<std::vector<double>>();
            cfg.sweep = s;
        }
        cfg.reps = j.value("reps", std::size_t{1000});
        cfg.tests.alpha = j.value("alpha", 0.05);
        cfg.seed = j.value("seed", std::uint64_t{1});
        if (j.contains("tests")) {
            cfg.tests.which.clear();
            for (const auto& t : j["tests"]) cfg.tests.which.push_back(parse_test_name(t.get<std::string>()));
        }
        if (j.contains("transforms"))
            for (const auto& [name, kind] : j["transforms"].items())
                cfg.tests.transform_map[parse_test_name(name)] = parse_transform(kind.get<std::string>());
        cfg.tests.wls_weighting = parse_wls_weighting(j.value("wls_weights", std::string("consistent")));
        cfg.output = j.value("output", std::string());
        cfg.workers = j.value("workers", std::size_t{1});
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid experiment config: ") + e.what());
    }
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return experiment_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

// Replications ---------------------------------------------------------------

std::vector<TestOutcome> run_replication(const ExperimentConfig& cfg, std::size_t rep) {
    if (rep >= cfg.reps)
        throw IndexError("replication " + std::to_string(rep) + " out of range (reps=" + std::to_string(cfg.reps) +
                         ")");
    const auto gen = generate_panel(cfg.dgp, cfg.seed, static_cast<std::uint32_t>(rep));
    const auto entries = run_suite(gen.data, cfg.tests);
    std::vector<TestOutcome> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        TestOutcome o;
        o.test = e.test;
        o.ok = e.ok();
        if (o.ok) {
            o.statistic = e.result->statistic;
            o.reject = e.result->reject;
        } else {
            o.error = e.error;
        }
        out.push_back(std::move(o));
    }
    return out;
}

std::string PowerRow::key() const {
    std::ostringstream k;
    k << n << ',' << t << ',' << p << ',' << m_total << ',' << format_double(lambda) << ','
      << format_double(h) << ',' << transform << ',' << test << ',' << reps << ',' << seed;
    return k.str();
}

std::string format_row(const PowerRow& r) {
    std::ostringstream out;
    out << r.n << ',' << r.t << ',' << r.k << ',' << r.p << ',' << r.m_total << ',' << format_double(r.lambda)
        << ',' << format_double(r.h) << ',' << r.transform << ',' << r.test << ',' << r.reps << ',' << r.n_reject
        << ',' << r.n_errors << ',' << format_double(r.rejection_rate) << ',' << format_double(r.mc_std_err)
        << ',' << r.seed << ',' << format_double(r.elapsed_s);
    return out.str();
}

PowerRow parse_row(const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 16) throw ParseError("results row has " + std::to_string(f.size()) + " fields, expected 16", 0);
    try {
        PowerRow r;
        r.n = std::stoul(f[0]);
        r.t = std::stoul(f[1]);
        r.k = std::stoul(f[2]);
        r.p = std::stoul(f[3]);
        r.m_total = std::stoul(f[4]);
        r.lambda = std::stod(f[5]);
        r.h = std::stod(f[6]);
        r.transform = f[7];
        r.test = f[8];
        r.reps = std::stoul(f[9]);
        r.n_reject = std::stoul(f[10]);
        r.n_errors = std::stoul(f[11]);
        r.rejection_rate = std::stod(f[12]);
        r.mc_std_err = std::stod(f[13]);
        r.seed = std::stoull(f[14]);
        r.elapsed_s = std::stod(f[15]);
        return r;
    } catch (const std::exception&) {
        throw ParseError("malformed results row: " + line, 0);
    }
}

std::vector<PowerRow> read_results(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader)
        throw ParseError("results file " + path.string() + " has an unexpected header", 1);
    std::vector<PowerRow> rows;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(parse_row(line));
    return rows;
}

std::vector<PowerRow> run_design_point(const ExperimentConfig& point) {
    point.validate();
    const auto start = std::chrono::steady_clock::now();
    const auto tests = point.tests.ordered_tests();

    std::vector<std::vector<TestOutcome>> outcomes(point.reps);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t rep = next++; rep < point.reps; rep = next++) outcomes[rep] = run_replication(point, rep);
    };
    const std::size_t workers = std::min(point.workers, point.reps);
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::vector<PowerRow> rows;
    for (std::size_t j = 0; j < tests.size(); ++j) {
        PowerRow r;
        r.n = point.dgp.n;
        r.t = point.dgp.t;
        r.k = 1;
        r.p = point.dgp.p;
        r.m_total = point.dgp.alternative_mass();
        r.lambda = point.dgp.lambda;
        r.h = point.dgp.h;
        r.transform = to_string(point.tests.transform_for(tests[j]));
        r.test = to_string(tests[j]);
        r.reps = point.reps;
        for (const auto& rep : outcomes) {
            if (!rep[j].ok)
                ++r.n_errors;
            else if (rep[j].reject)
                ++r.n_reject;
        }
        const auto valid = r.reps - r.n_errors;
        r.rejection_rate = valid > 0 ? static_cast<double>(r.n_reject) / static_cast<double>(valid) : std::nan("");
        r.mc_std_err = valid > 0 ? std::sqrt(r.rejection_rate * (1.0 - r.rejection_rate) / static_cast<double>(r.reps))
                                 : std::nan("");
        r.seed = point.seed;
        r.elapsed_s = elapsed;
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<PowerRow> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const bool persist = !cfg.output.empty();

    std::map<std::string, PowerRow> existing;
    if (persist && std::filesystem::exists(cfg.output)) {
        for (auto& r : read_results(cfg.output)) existing.emplace(r.key(), r);
    }
    std::ofstream sink;
    if (persist) {
        const bool fresh = !std::filesystem::exists(cfg.output);
        if (cfg.output.has_parent_path()) std::filesystem::create_directories(cfg.output.parent_path());
        sink.open(cfg.output, std::ios::app);
        if (!sink) throw IoError("cannot open " + cfg.output.string() + " for writing");
        if (fresh) sink << kResultsHeader << '\n' << std::flush;
    }

    std::vector<PowerRow> all;
    for (const auto& point : cfg.design_points()) {
        // rows already on disk for every selected test: reuse them
        std::vector<PowerRow> reused;
        for (auto t : point.tests.ordered_tests()) {
            PowerRow probe;
            probe.n = point.dgp.n;
            probe.t = point.dgp.t;
            probe.p = point.dgp.p;
            probe.m_total = point.dgp.alternative_mass();
            probe.lambda = point.dgp.lambda;
            probe.h = point.dgp.h;
            probe.transform = to_string(point.tests.transform_for(t));
            probe.test = to_string(t);
            probe.reps = point.reps;
            probe.seed = point.seed;
            if (auto it = existing.find(probe.key()); it != existing.end()) reused.push_back(it->second);
        }
        if (reused.size() == point.tests.ordered_tests().size()) {
            all.insert(all.end(), reused.begin(), reused.end());
            continue;
        }
        for (auto& row : run_design_point(point)) {
            if (persist) {
                if (existing.count(row.key()) == 0) {
                    sink << format_row(row) << '\n' << std::flush;
                    if (!sink) throw IoError("write failed for " + cfg.output.string());
                }
            }
            all.push_back(std::move(row));
        }
    }
    return all;
}

// Summary --------------------------------------------------------------------

namespace {

double sweep_coordinate(const PowerRow& r, std::optional<SweepVariable> var) {
    if (!var) return static_cast<double>(r.m_total);
    switch (*var) {
        case SweepVariable::M2:
        case SweepVariable::TotalM: return static_cast<double>(r.m_total);
        case SweepVariable::Lambda: return r.lambda;
        case SweepVariable::P: return static_cast<double>(r.p);
        case SweepVariable::T: return static_cast<double>(r.t);
    }
    return 0.0;
}

ordered_json number_or_null(double v) {
    return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

}  // namespace

ordered_json summarize(const std::vector<PowerRow>& rows, std::optional<SweepVariable> sweep) {
    if (rows.empty()) throw EmptyError("no result rows to summarize");

    std::vector<std::string> test_order;
    std::map<std::string, std::vector<const PowerRow*>> by_test;
    for (const auto& r : rows) {
        if (!by_test.count(r.test)) test_order.push_back(r.test);
        by_test[r.test].push_back(&r);
    }

    ordered_json out;
    out["sweep_variable"] = sweep ? to_string(*sweep) : std::string("m_total");
    out["n"] = rows.front().n;
    out["sqrt_n_threshold"] = std::sqrt(static_cast<double>(rows.front().n));
    bool any_flag = false;
    ordered_json curves = ordered_json::object();
    for (const auto& name : test_order) {
        auto& list = by_test[name];
        std::stable_sort(list.begin(), list.end(), [&](const PowerRow* a, const PowerRow* b) {
            return sweep_coordinate(*a, sweep) < sweep_coordinate(*b, sweep);
        });
        ordered_json curve = ordered_json::array();
        for (const auto* r : list) {
            const double error_share = static_cast<double>(r->n_errors) / static_cast<double>(r->reps);
            const bool flagged = error_share > kErrorFlagShare;
            any_flag = any_flag || flagged;
            ordered_json point;
            point["x"] = sweep_coordinate(*r, sweep);
            point["N"] = r->n;
            point["T"] = r->t;
            point["P"] = r->p;
            point["M_total"] = r->m_total;
            point["lambda"] = r->lambda;
            point["h"] = r->h;
            point["transform"] = r->transform;
            point["reps"] = r->reps;
            point["n_reject"] = r->n_reject;
            point["n_errors"] = r->n_errors;
            point["rejection_rate"] = number_or_null(r->rejection_rate);
            point["mc_std_err"] = number_or_null(r->mc_std_err);
            point["boundary_gamma_large_t"] =
                boundary_gamma(static_cast<double>(r->n), static_cast<double>(r->t),
                               static_cast<double>(r->m_total), Regime::LargeT);
            point["boundary_gamma_fixed_t"] = boundary_gamma(static_cast<double>(r->n), static_cast<double>(r->t),
                                                             static_cast<double>(r->m_total), Regime::FixedT);
            point["below_sqrt_n"] = static_cast<double>(r->m_total) < std::sqrt(static_cast<double>(r->n));
            point["error_flag"] = flagged;
            curve.push_back(point);
        }
        curves[name] = curve;
    }
    out["curves"] = curves;
    out["error_flag"] = any_flag;
    out["misspecified"] = std::any_of(rows.begin(), rows.end(), [](const PowerRow& r) { return r.transform == "none"; });
    return out;
}

}  // namespace grouptest
