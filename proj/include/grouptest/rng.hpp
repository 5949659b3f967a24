#pragma once

// Counter-based random streams. Every draw is a pure function of
// (seed, rep, unit, purpose, index), so replications can be generated in any
// order or concurrently with identical results.

#include <array>
#include <cstdint>

namespace grouptest {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds.
PhiloxBlock philox4x32(PhiloxBlock counter, PhiloxKey key);

enum class StreamPurpose : std::uint32_t {
    UnitParams = 1,
    Regressor = 2,
    Error = 3,
    GroupShift = 4,
    GroupSplit = 5,
    Shuffle = 6,
};

class CounterStream {
public:
    CounterStream(std::uint64_t seed, std::uint32_t rep, std::uint32_t unit, StreamPurpose purpose);

    std::uint64_t next_u64();
    /// Uniform on the open interval (0,1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal by inversion of the CDF.
    double normal();
    /// Chi-squared with integer df as a sum of squared normals.
    double chi_squared(int df);
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

private:
    PhiloxKey key_;
    PhiloxBlock counter_;
    PhiloxBlock buffer_{};
    int used_ = 4;
};

}  // namespace grouptest
