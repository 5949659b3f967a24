#include "grouptest/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "grouptest/harness.hpp"

namespace grouptest {

using nlohmann::json;
using nlohmann::ordered_json;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return kExitUsage;
        case ErrorKind::Data: return kExitData;
        case ErrorKind::Numerical: return kExitNumerical;
    }
    return kExitData;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<TestName> parse_test_list(const std::vector<std::string>& names) {
    std::vector<TestName> out;
    for (const auto& raw : names)
        for (const auto& name : split(raw, ',')) {
            if (name == "all") return {TestName::Swamy, TestName::Delta, TestName::ScJ, TestName::BrsLm};
            out.push_back(parse_test_name(name));
        }
    if (out.empty()) throw ConfigError("no tests selected");
    return out;
}

}  // namespace

std::map<TestName, TransformKind> parse_transform_map(const std::string& spec,
                                                      const std::vector<TestName>& tests) {
    std::map<TestName, TransformKind> out;
    if (spec.empty()) return out;
    if (spec.find('=') == std::string::npos) {
        const auto kind = parse_transform(spec);
        for (auto t : tests) out[t] = kind;
        return out;
    }
    for (const auto& pair : split(spec, ',')) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos) throw ConfigError("expected test=transform, got '" + pair + "'");
        out[parse_test_name(pair.substr(0, eq))] = parse_transform(pair.substr(eq + 1));
    }
    return out;
}

// JSON ----------------------------------------------------------------------

namespace {

ordered_json matrix_json(const SymMatrix& m) {
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < m.dim(); ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

SymMatrix matrix_from(const json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    SymMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) throw ConfigError("moment matrix is not square");
        for (std::size_t c = 0; c <= i; ++c) m.set(i, c, rows[i][c]);
    }
    return m;
}

ordered_json group_json(const GroupMoments& g) {
    ordered_json out;
    out["q"] = matrix_json(g.q);
    out["s"] = matrix_json(g.s);
    out["w"] = matrix_json(g.w);
    out["omega"] = ordered_json::array();
    for (const auto& m : g.omega) out["omega"].push_back(matrix_json(m));
    out["sigma_cap"] = matrix_json(g.sigma_cap);
    out["u"] = ordered_json::array();
    for (const auto& m : g.u) out["u"].push_back(matrix_json(m));
    return out;
}

GroupMoments group_from(const json& j) {
    GroupMoments g;
    g.q = matrix_from(j.at("q"));
    g.s = matrix_from(j.at("s"));
    g.w = matrix_from(j.at("w"));
    for (const auto& m : j.at("omega")) g.omega.push_back(matrix_from(m));
    g.sigma_cap = matrix_from(j.at("sigma_cap"));
    for (const auto& m : j.at("u")) g.u.push_back(matrix_from(m));
    return g;
}

}  // namespace

ordered_json moment_spec_to_json(const MomentSpec& ms) {
    ordered_json out;
    out["k"] = ms.k;
    out["full"] = group_json(ms.full);
    out["groups"] = ordered_json::array();
    for (const auto& g : ms.groups) out["groups"].push_back(group_json(g));
    out["psi"] = matrix_json(ms.psi);
    out["curly_v"] = matrix_json(ms.curly_v);
    out["v0"] = ms.v0;
    return out;
}

MomentSpec moment_spec_from_json(const json& j) {
    try {
        MomentSpec ms;
        ms.k = j.at("k").get<std::size_t>();
        ms.full = group_from(j.at("full"));
        for (const auto& g : j.at("groups")) ms.groups.push_back(group_from(g));
        ms.psi = matrix_from(j.at("psi"));
        ms.curly_v = matrix_from(j.at("curly_v"));
        ms.v0 = j.at("v0").get<double>();
        ms.validate();
        return ms;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid moment file: ") + e.what());
    }
}

ordered_json suite_to_json(const std::vector<SuiteEntry>& entries, double alpha) {
    ordered_json out;
    out["alpha"] = alpha;
    out["results"] = ordered_json::array();
    for (const auto& e : entries) {
        ordered_json r;
        r["test"] = to_string(e.test);
        r["transform"] = to_string(e.transform);
        if (e.ok()) {
            r["statistic"] = e.result->statistic;
            r["p_value"] = e.result->p_value;
            r["reference"] = e.result->dist == RefDist::ChiSquared ? "chi2" : "normal_upper";
            r["df"] = e.result->df;
            r["reject"] = e.result->reject;
            r["alpha"] = e.result->alpha;
            r["error"] = nullptr;
        } else {
            r["statistic"] = nullptr;
            r["p_value"] = nullptr;
            r["reference"] = nullptr;
            r["df"] = nullptr;
            r["reject"] = nullptr;
            r["alpha"] = alpha;
            r["error"] = e.error;
        }
        out["results"].push_back(r);
    }
    return out;
}

// Subcommands ----------------------------------------------------------------

namespace {

std::size_t default_workers() {
    const char* env = std::getenv("GROUPTEST_WORKERS");
    if (!env || !*env) return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw ConfigError(std::string("GROUPTEST_WORKERS must be a positive integer, got '") +
                                                 env + "'");
    return static_cast<std::size_t>(v);
}

std::string fmt(double v) {
    std::ostringstream o;
    o << std::setprecision(10) << v;
    return o.str();
}

struct TestArgs {
    std::string data;
    std::size_t k = 1;
    double alpha = 0.05;
    std::vector<std::string> tests{"all"};
    std::string transform;
    std::string wls = "consistent";
    bool json = false, csv = false;
};

void warn_pairings(const SlopeTestSuite& suite, std::ostream& err) {
    for (auto t : suite.ordered_tests()) {
        const auto kind = suite.transform_for(t);
        if (kind != default_transform(t))
            err << "warning: " << to_string(t) << " paired with " << to_string(kind) << " (default "
                << to_string(default_transform(t)) << ")\n";
    }
}

int cmd_test(const TestArgs& a, std::ostream& out, std::ostream& err) {
    SlopeTestSuite suite;
    suite.alpha = a.alpha;
    suite.which = parse_test_list(a.tests);
    suite.transform_map = parse_transform_map(a.transform, suite.which);
    suite.wls_weighting = parse_wls_weighting(a.wls);
    suite.validate();
    warn_pairings(suite, err);

    const auto data = load_panel_csv(a.data, a.k);
    const auto entries = run_suite(data, suite);

    if (a.json) {
        out << suite_to_json(entries, a.alpha).dump(2) << '\n';
    } else if (a.csv) {
        out << "test,transform,statistic,p_value,reference,df,reject,alpha,error\n";
        for (const auto& e : entries) {
            out << to_string(e.test) << ',' << to_string(e.transform) << ',';
            if (e.ok())
                out << std::setprecision(17) << e.result->statistic << ',' << e.result->p_value << ','
                    << (e.result->dist == RefDist::ChiSquared ? "chi2" : "normal_upper") << ',' << e.result->df
                    << ',' << (e.result->reject ? "true" : "false") << ',' << e.result->alpha << ",\n";
            else
                out << ",,,,," << a.alpha << ",\"" << e.error << "\"\n";
        }
    } else {
        out << std::left << std::setw(8) << "test" << std::setw(10) << "transform" << std::setw(16) << "statistic"
            << std::setw(14) << "p_value" << std::setw(8) << "reject" << "alpha\n";
        for (const auto& e : entries) {
            out << std::setw(8) << to_string(e.test) << std::setw(10) << to_string(e.transform);
            if (e.ok())
                out << std::setw(16) << fmt(e.result->statistic) << std::setw(14) << fmt(e.result->p_value)
                    << std::setw(8) << (e.result->reject ? "yes" : "no") << e.result->alpha << '\n';
            else
                out << "error: " << e.error << '\n';
        }
    }
    for (const auto& e : entries)
        if (!e.ok()) return exit_code_for(e.error_kind.value_or(ErrorKind::Numerical));
    return kExitOk;
}

struct SimArgs {
    std::string config;
    std::size_t n = 100, t = 100, p = 2, burn_in = 50;
    std::vector<std::size_t> m2;
    std::size_t m_total = 0;
    double lambda = 0.0, h = 0.0, alpha = 0.05, base_beta = 1.0;
    std::size_t reps = 1000;
    std::uint64_t seed = 1;
    std::string design = "ar1";
    bool shuffle = false;
    std::vector<std::string> tests{"delta", "sc_j", "brs_lm"};
    std::string transform;
    std::string wls = "consistent";
    std::string vary;
    std::vector<double> values;
    std::string output = ".";
    std::size_t workers = 0;
};

ExperimentConfig build_experiment(const SimArgs& a, const CLI::App& sub, bool need_sweep) {
    ExperimentConfig cfg;
    if (!a.config.empty()) {
        cfg = load_experiment(a.config);
    } else {
        cfg.dgp.n = a.n;
        cfg.dgp.t = a.t;
        cfg.dgp.p = a.p;
        cfg.dgp.burn_in = a.burn_in;
        cfg.dgp.base_beta = a.base_beta;
        cfg.dgp.lambda = a.lambda;
        cfg.dgp.h = a.h;
        cfg.dgp.design = parse_design(a.design);
        cfg.dgp.shuffle = a.shuffle;
        cfg.dgp.group_sizes = a.m2;
        if (sub.count("--m-total") > 0) cfg.dgp.total_m = a.m_total;
        cfg.reps = a.reps;
        cfg.seed = a.seed;
        cfg.tests.alpha = a.alpha;
        cfg.tests.which = parse_test_list(a.tests);
        cfg.tests.transform_map = parse_transform_map(a.transform, cfg.tests.which);
        cfg.tests.wls_weighting = parse_wls_weighting(a.wls);
        if (!a.vary.empty()) {
            if (a.values.empty()) throw ConfigError("--vary needs --values");
            cfg.sweep = Sweep{parse_sweep_variable(a.vary), a.values};
        }
    }
    if (need_sweep && !cfg.sweep) throw ConfigError("sweep needs --vary and --values (or a config with a sweep)");
    cfg.workers = a.workers > 0 ? a.workers : default_workers();
    cfg.output = std::filesystem::path(a.output) / "results.csv";
    cfg.validate();
    return cfg;
}

int cmd_simulate(const SimArgs& a, const CLI::App& sub, bool need_sweep, std::ostream& out, std::ostream& err) {
    const auto cfg = build_experiment(a, sub, need_sweep);
    warn_pairings(cfg.tests, err);
    std::filesystem::create_directories(a.output);
    {
        std::ofstream cfg_out(std::filesystem::path(a.output) / "config.json");
        if (!cfg_out) throw IoError("cannot write config.json to " + a.output);
        cfg_out << experiment_to_json(cfg).dump(2) << '\n';
    }
    const auto rows = run_experiment(cfg);
    auto summary = summarize(rows, cfg.sweep ? std::optional(cfg.sweep->variable) : std::nullopt);
    // untransformed tests only miss the intercepts of the ar1 design
    if (cfg.dgp.design == DgpDesign::Clean) summary["misspecified"] = false;
    const auto summary_path = std::filesystem::path(a.output) / "summary.json";
    std::ofstream s(summary_path);
    if (!s) throw IoError("cannot write " + summary_path.string());
    s << summary.dump(2) << '\n';

    out << kResultsHeader << '\n';
    for (const auto& r : rows) out << format_row(r) << '\n';
    err << "wrote " << cfg.output.string() << " and " << summary_path.string() << '\n';
    if (summary["error_flag"].get<bool>()) err << "warning: more than 1% of replications failed for some rows\n";
    return kExitOk;
}

struct TheoryArgs {
    std::size_t n = 100, t = 100, m = 10;
    std::optional<double> gamma;
    double lambda = 1.0, alpha = 0.05;
    std::string regime = "large_t";
    std::string moments = "auto";
    std::vector<std::string> tests{"delta", "sc_j", "brs_lm"};
    std::string design = "ar1";
    std::size_t moment_reps = 20;
    std::uint64_t seed = 1;
};

struct MomentArgs {
    std::size_t n = 400, t = 100, m = 100, reps = 200;
    std::string design = "ar1";
    std::string transform;
    std::uint64_t seed = 1;
    std::string output;
};

TransformKind moment_transform(const std::string& flag, DgpDesign design) {
    if (!flag.empty()) return parse_transform(flag);
    return design == DgpDesign::Clean ? TransformKind::None : TransformKind::Within;
}

DgpConfig moment_design(std::size_t n, std::size_t t, std::size_t m, const std::string& design) {
    DgpConfig d;
    d.n = n;
    d.t = t;
    d.p = 2;
    d.group_sizes = {m};
    d.design = parse_design(design);
    return d;
}

ordered_json moment_report(const MomentEstimate& est) {
    ordered_json out;
    out["reps"] = est.reps;
    out["mean"] = moment_spec_to_json(est.mean);
    out["std_error"] = moment_spec_to_json(est.std_error);
    return out;
}

int cmd_moments(const MomentArgs& a, std::ostream& out) {
    const auto d = moment_design(a.n, a.t, a.m, a.design);
    const auto est = estimate_moments(d, a.reps, a.seed, moment_transform(a.transform, d.design));
    const auto report = moment_report(est).dump(2);
    if (a.output.empty()) {
        out << report << '\n';
    } else {
        std::ofstream f(a.output);
        if (!f) throw IoError("cannot write " + a.output);
        f << report << '\n';
    }
    return kExitOk;
}

int cmd_theory(const TheoryArgs& a, std::ostream& out) {
    const auto regime = parse_regime(a.regime);
    const auto tests = parse_test_list(a.tests);
    for (auto t : tests) {
        if (t == TestName::Swamy) throw ConfigError("swamy has no local power result");
        if (regime == Regime::FixedT && t != TestName::BrsLm)
            throw ConfigError(to_string(t) +
                              " has no fixed-T local power result (it needs large T); use brs_lm or large_t");
    }
    if (a.n == 0 || a.t == 0 || a.m == 0 || a.m >= a.n) throw ConfigError("need 0 < m < n and t > 0");
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw ConfigError("alpha must lie strictly inside (0,1)");

    const double n = static_cast<double>(a.n), t = static_cast<double>(a.t), m = static_cast<double>(a.m);
    const double boundary = boundary_gamma(n, t, m, regime);
    const double gamma = a.gamma.value_or(boundary);
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    const double m0 = plugin_m0(n, m);
    const double c = plugin_c(n, t, m, gamma, regime);

    MomentSpec ms;
    if (a.moments == "auto") {
        const auto d = moment_design(a.n, a.t, a.m, a.design);
        ms = estimate_moments(d, a.moment_reps, a.seed, moment_transform("", d.design)).mean;
    } else {
        std::ifstream f(a.moments);
        if (!f) throw IoError("cannot open " + a.moments);
        json j;
        try {
            j = json::parse(f);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("moment file is not valid JSON: ") + e.what());
        }
        ms = moment_spec_from_json(j.contains("mean") ? j["mean"] : j);
    }
    if (ms.k != 1) throw ConfigError("theory subcommand supports K = 1 moments");
    const auto alt = LocalAlternative::two_group({a.lambda}, m0, c);

    ordered_json report;
    report["regime"] = to_string(regime);
    report["boundary"] = boundary;
    report["gamma"] = gamma;
    report["c"] = c;
    report["m0"] = m0;
    ordered_json nc = ordered_json::object(), power = ordered_json::object();
    for (auto test : tests) {
        double value = 0.0;
        switch (test) {
            case TestName::Delta: value = noncentrality_delta(ms, alt); break;
            case TestName::ScJ: value = noncentrality_j(ms, alt); break;
            case TestName::BrsLm: value = noncentrality_lm(ms, alt, regime).ncp; break;
            case TestName::Swamy: break;
        }
        nc[to_string(test)] = value;
        power[to_string(test)] = asymptotic_power(test, value, ms.k, a.alpha);
    }
    report["noncentralities"] = nc;
    report["asymptotic_power"] = power;
    out << report.dump(2) << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"grouped slope homogeneity diagnostics"};
    app.require_subcommand(1);

    TestArgs targ;
    auto* test = app.add_subcommand("test", "run slope homogeneity tests on a panel CSV");
    test->add_option("--data", targ.data, "CSV with columns unit,time,y,x1..xK")->required();
    test->add_option("--k", targ.k, "number of regressors")->check(CLI::PositiveNumber);
    test->add_option("--alpha", targ.alpha, "significance level");
    test->add_option("--tests", targ.tests, "swamy,delta,sc_j,brs_lm or all")->delimiter(',');
    test->add_option("--transform", targ.transform, "none|within|fod, or test=kind pairs");
    test->add_option("--py-wls-weights", targ.wls, "consistent|sigma-hat");
    auto* json_flag = test->add_flag("--json", targ.json, "JSON report");
    test->add_flag("--csv", targ.csv, "CSV report")->excludes(json_flag);

    SimArgs sarg;
    auto add_sim = [&](CLI::App* sub, bool sweep) {
        sub->set_help_flag("--help", "print this help and exit");
        auto* cfg = sub->add_option("--config", sarg.config, "experiment config JSON");
        auto inline_opt = [&](CLI::Option* o) { o->excludes(cfg); };
        inline_opt(sub->add_option("--n", sarg.n)->check(CLI::PositiveNumber));
        inline_opt(sub->add_option("--t", sarg.t)->check(CLI::PositiveNumber));
        inline_opt(sub->add_option("--p", sarg.p)->check(CLI::PositiveNumber));
        inline_opt(sub->add_option("--m2", sarg.m2, "alternative group sizes M2..MP")->delimiter(','));
        inline_opt(sub->add_option("--m-total", sarg.m_total, "total alternative units, split at random"));
        inline_opt(sub->add_option("--lambda", sarg.lambda));
        inline_opt(sub->add_option("--h", sarg.h));
        inline_opt(sub->add_option("--reps", sarg.reps));
        inline_opt(sub->add_option("--seed", sarg.seed));
        inline_opt(sub->add_option("--alpha", sarg.alpha));
        inline_opt(sub->add_option("--burn-in", sarg.burn_in));
        inline_opt(sub->add_option("--base-beta", sarg.base_beta));
        inline_opt(sub->add_option("--design", sarg.design, "ar1|clean"));
        inline_opt(sub->add_flag("--shuffle", sarg.shuffle));
        inline_opt(sub->add_option("--tests", sarg.tests)->delimiter(','));
        inline_opt(sub->add_option("--transform", sarg.transform));
        inline_opt(sub->add_option("--py-wls-weights", sarg.wls));
        if (sweep) {
            inline_opt(sub->add_option("--vary", sarg.vary, "m2|lambda|total_m|p|t"));
            inline_opt(sub->add_option("--values", sarg.values)->delimiter(','));
        }
        sub->add_option("--output", sarg.output, "output directory");
        sub->add_option("--workers", sarg.workers, "worker threads (default GROUPTEST_WORKERS or 1)");
    };
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo rejection rates at one design point");
    add_sim(simulate, false);
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo power curve over one design variable");
    add_sim(sweep, true);

    TheoryArgs tharg;
    auto* theory = app.add_subcommand("theory", "local power calculator");
    theory->add_option("--n", tharg.n);
    theory->add_option("--t", tharg.t);
    theory->add_option("--m", tharg.m, "alternative group size");
    theory->add_option("--gamma", tharg.gamma, "slope gap scale (default: the boundary, c = 1)");
    theory->add_option("--lambda", tharg.lambda);
    theory->add_option("--alpha", tharg.alpha);
    theory->add_option("--regime", tharg.regime, "large_t|fixed_t");
    theory->add_option("--moments", tharg.moments, "moment JSON path or auto");
    theory->add_option("--tests", tharg.tests)->delimiter(',');
    theory->add_option("--design", tharg.design, "design for --moments auto");
    theory->add_option("--moment-reps", tharg.moment_reps);
    theory->add_option("--seed", tharg.seed);

    MomentArgs marg;
    auto* moments = app.add_subcommand("moments", "Monte Carlo estimates of the limit moment matrices");
    moments->add_option("--n", marg.n);
    moments->add_option("--t", marg.t);
    moments->add_option("--m", marg.m);
    moments->add_option("--reps", marg.reps);
    moments->add_option("--design", marg.design);
    moments->add_option("--transform", marg.transform);
    moments->add_option("--seed", marg.seed);
    moments->add_option("--output", marg.output, "write JSON here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*test) return cmd_test(targ, out, err);
        if (*simulate) return cmd_simulate(sarg, *simulate, false, out, err);
        if (*sweep) return cmd_simulate(sarg, *sweep, true, out, err);
        if (*theory) return cmd_theory(tharg, out);
        if (*moments) return cmd_moments(marg, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace grouptest
