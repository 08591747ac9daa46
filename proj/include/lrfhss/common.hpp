#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace lrfhss {

using cf32 = std::complex<float>;
using cf64 = std::complex<double>;
using Bits = std::vector<std::uint8_t>;
using Soft = std::vector<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// air interface
inline constexpr double kSymbolRate = 125000.0 / 256.0;   // 488.28125 baud
inline constexpr double kSymbolPeriod = 1.0 / kSymbolRate;
inline constexpr int kHeaderSymbols = 114;
inline constexpr int kFragmentSymbols = 50;
inline constexpr int kSyncSymbols = 32;
inline constexpr int kHeaderCodedBits = 80;
inline constexpr int kFragmentCodedBits = 48;
inline constexpr int kTermSymbols = 2;
inline constexpr std::uint32_t kSyncword = 0x2C0F7995u;

// header block: 40 coded | 32 sync | 40 coded | 2 termination
inline constexpr int kSyncStart = 40;
inline constexpr int kSyncEnd = kSyncStart + kSyncSymbols;

struct Error : std::runtime_error {
    std::string kind;
    Error(std::string k, const std::string& what)
        : std::runtime_error(k + ": " + what), kind(std::move(k)) {}
};

// Sample buffer with an absolute time axis. t0 is the time of sample 0.
struct IqBuffer {
    std::vector<cf64> samples;
    double sample_rate = 0.0;
    double t0 = 0.0;

    std::size_t size() const { return samples.size(); }
    double time_of(double index) const { return t0 + index / sample_rate; }
};

inline double wrap_pi(double x)
{
    x = std::fmod(x + kPi, kTwoPi);
    if (x < 0) x += kTwoPi;
    return x - kPi;
}

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double x) { return 10.0 * std::log10(x); }

// splitmix64 step, used to derive independent seeds from (seed, index) pairs
inline std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0)
{
    return mix_seed(mix_seed(mix_seed(seed) ^ a) ^ (b * 0x632BE59BD9B4E019ull));
}

// symbols are +1 / -1, bit 1 maps to +1
inline int bit_to_symbol(std::uint8_t b) { return b ? 1 : -1; }

inline Bits syncword_bits()
{
    Bits b(kSyncSymbols);
    for (int i = 0; i < kSyncSymbols; ++i) b[i] = (kSyncword >> (31 - i)) & 1u;
    return b;
}

} // namespace lrfhss
