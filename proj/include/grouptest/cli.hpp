#pragma once

// Command-line front end. Subcommands: test, simulate, sweep, theory, moments.
// Exit codes: 0 success, 1 usage, 2 data, 3 numerical.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "grouptest/slope_tests.hpp"
#include "grouptest/theory.hpp"

namespace grouptest {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

int exit_code_for(ErrorKind kind);

/// "within" applies one kind to every selected test; "delta=within,brs_lm=fod"
/// sets individual tests.
std::map<TestName, TransformKind> parse_transform_map(const std::string& spec,
                                                      const std::vector<TestName>& tests);

/// Report written by `test --json`.
nlohmann::ordered_json suite_to_json(const std::vector<SuiteEntry>& entries, double alpha);

nlohmann::ordered_json moment_spec_to_json(const MomentSpec& ms);
MomentSpec moment_spec_from_json(const nlohmann::json& j);

/// argv[0] is skipped.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace grouptest
