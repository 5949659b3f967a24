#include "grouptest/rng.hpp"

#include "grouptest/numkern.hpp"

namespace grouptest {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

PhiloxBlock philox4x32(PhiloxBlock c, PhiloxKey k) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

CounterStream::CounterStream(std::uint64_t seed, std::uint32_t rep, std::uint32_t unit,
                             StreamPurpose purpose)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0u, unit, rep, static_cast<std::uint32_t>(purpose)} {}

std::uint64_t CounterStream::next_u64() {
    if (used_ >= 4) {
        buffer_ = philox4x32(counter_, key_);
        ++counter_[0];
        used_ = 0;
    }
    const std::uint64_t hi = buffer_[used_];
    const std::uint64_t lo = buffer_[used_ + 1];
    used_ += 2;
    return (hi << 32) | lo;
}

double CounterStream::uniform() {
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    return (static_cast<double>(next_u64() >> 11) + 0.5) * scale;
}

double CounterStream::normal() {
    return std_normal_quantile(uniform());
}

double CounterStream::chi_squared(int df) {
    double s = 0.0;
    for (int j = 0; j < df; ++j) {
        const double z = normal();
        s += z * z;
    }
    return s;
}

std::uint64_t CounterStream::below(std::uint64_t bound) {
    // reject the top partial block so the modulo is unbiased
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % bound);
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % bound;
}

}  // namespace grouptest
