#pragma once

#include "lrfhss/common.hpp"

#include <array>
#include <bit>
#include <limits>
#include <span>

namespace lrfhss {

// K=7 mother code, rate 1/3, generators 133/171/165 (octal)
inline constexpr int kConstraint = 7;
inline constexpr int kMemory = kConstraint - 1;
inline constexpr int kStates = 1 << kMemory;
inline constexpr std::array<unsigned, 3> kGenerators{0133, 0171, 0165};

enum class CodingRate { R1_3, R1_2, R2_3, R5_6 };

inline const char* to_string(CodingRate r)
{
    switch (r) {
    case CodingRate::R1_3: return "1/3";
    case CodingRate::R1_2: return "1/2";
    case CodingRate::R2_3: return "2/3";
    case CodingRate::R5_6: return "5/6";
    }
    return "?";
}

inline CodingRate parse_rate(const std::string& s)
{
    if (s == "1/3") return CodingRate::R1_3;
    if (s == "1/2") return CodingRate::R1_2;
    if (s == "2/3") return CodingRate::R2_3;
    if (s == "5/6") return CodingRate::R5_6;
    throw Error("bad-rate", "unknown coding rate '" + s + "'");
}

// keep-masks over the mother outputs (g0,g1,g2) of consecutive info bits
struct PunctureMask {
    int period = 1;            // info bits per period
    std::vector<std::uint8_t> keep; // 3 * period entries
    int kept() const
    {
        int n = 0;
        for (auto k : keep) n += k;
        return n;
    }
};

inline PunctureMask puncture_mask(CodingRate r)
{
    switch (r) {
    case CodingRate::R1_3: return {1, {1, 1, 1}};
    case CodingRate::R1_2: return {1, {1, 1, 0}};
    case CodingRate::R2_3: return {2, {1, 1, 0, 1, 0, 0}};
    case CodingRate::R5_6: return {5, {1, 1, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0, 1, 0, 0}};
    }
    throw Error("bad-rate", "unknown coding rate");
}

// tail length: at least K-1 zeros, padded so the input is a whole number of puncturing periods
inline int tail_bits_for(int data_bits, CodingRate r)
{
    int period = puncture_mask(r).period;
    int t = kMemory;
    while ((data_bits + t) % period) ++t;
    return t;
}

inline int coded_length(int input_bits, CodingRate r)
{
    auto m = puncture_mask(r);
    return input_bits / m.period * m.kept();
}

inline std::array<std::uint8_t, 3> encoder_output(unsigned state, unsigned bit)
{
    unsigned reg = (bit << kMemory) | state;
    return {static_cast<std::uint8_t>(std::popcount(reg & kGenerators[0]) & 1),
            static_cast<std::uint8_t>(std::popcount(reg & kGenerators[1]) & 1),
            static_cast<std::uint8_t>(std::popcount(reg & kGenerators[2]) & 1)};
}

inline unsigned next_state(unsigned state, unsigned bit) { return ((bit << kMemory) | state) >> 1; }

// rate 1/3 mother encoding from the zero state; caller appends tail bits
inline Bits conv_encode(std::span<const std::uint8_t> bits)
{
    Bits out;
    out.reserve(bits.size() * 3);
    unsigned s = 0;
    for (auto b : bits) {
        auto o = encoder_output(s, b & 1u);
        out.insert(out.end(), o.begin(), o.end());
        s = next_state(s, b & 1u);
    }
    return out;
}

template <typename T>
std::vector<T> puncture(std::span<const T> mother, CodingRate r)
{
    auto m = puncture_mask(r);
    const std::size_t block = m.keep.size();
    if (mother.size() % block)
        throw Error("length-mismatch", "coded length " + std::to_string(mother.size()) +
                                           " not a multiple of puncturing period " + std::to_string(block));
    std::vector<T> out;
    out.reserve(mother.size() / block * m.kept());
    for (std::size_t i = 0; i < mother.size(); ++i)
        if (m.keep[i % block]) out.push_back(mother[i]);
    return out;
}

inline Bits puncture(const Bits& mother, CodingRate r) { return puncture<std::uint8_t>(std::span(mother), r); }

// punctured positions come back as 0 (no information)
inline Soft depuncture(std::span<const double> soft, CodingRate r)
{
    auto m = puncture_mask(r);
    const int kept = m.kept();
    if (soft.size() % kept)
        throw Error("length-mismatch", "punctured length " + std::to_string(soft.size()) +
                                           " not a multiple of " + std::to_string(kept));
    Soft out;
    out.reserve(soft.size() / kept * m.keep.size());
    std::size_t j = 0;
    while (j < soft.size())
        for (auto k : m.keep) out.push_back(k ? soft[j++] : 0.0);
    return out;
}

struct ViterbiResult {
    Bits bits;                 // includes tail
    bool terminated = false;   // best final state was the zero state
    double metric = 0.0;
};

// Soft-input Viterbi on the rate 1/3 mother trellis. soft > 0 favours bit 1, 0 is an erasure.
// Traceback starts from state 0 when `terminated`, else from the best state. Inputs from
// `free_bits` on are known zeros.
inline ViterbiResult viterbi_decode(std::span<const double> soft, bool terminated = true,
                                    std::size_t free_bits = std::numeric_limits<std::size_t>::max())
{
    if (soft.size() % 3) throw Error("length-mismatch", "mother-code soft length not a multiple of 3");
    const std::size_t n = soft.size() / 3;
    constexpr double kNeg = -std::numeric_limits<double>::infinity();

    static const auto table = [] {
        std::array<std::array<std::array<std::uint8_t, 3>, 2>, kStates> t{};
        for (unsigned s = 0; s < kStates; ++s)
            for (unsigned b = 0; b < 2; ++b) t[s][b] = encoder_output(s, b);
        return t;
    }();

    std::array<double, kStates> pm, nm;
    pm.fill(kNeg);
    pm[0] = 0.0;
    std::vector<std::array<std::uint8_t, kStates>> from(n); // predecessor low bit choice

    for (std::size_t k = 0; k < n; ++k) {
        const double s0 = soft[3 * k], s1 = soft[3 * k + 1], s2 = soft[3 * k + 2];
        nm.fill(kNeg);
        for (unsigned ns = 0; ns < kStates; ++ns) {
            // ns = (b << 5) | (s >> 1); predecessors differ in their lowest bit
            const unsigned b = ns >> (kMemory - 1);
            if (b && k >= free_bits) continue;
            for (unsigned lo = 0; lo < 2; ++lo) {
                const unsigned ps = ((ns << 1) & (kStates - 1)) | lo;
                if (pm[ps] == kNeg) continue;
                const auto& o = table[ps][b];
                double m = pm[ps] + (o[0] ? s0 : -s0) + (o[1] ? s1 : -s1) + (o[2] ? s2 : -s2);
                if (m > nm[ns]) {
                    nm[ns] = m;
                    from[k][ns] = static_cast<std::uint8_t>(lo);
                }
            }
        }
        pm = nm;
    }

    unsigned best = 0;
    for (unsigned s = 1; s < kStates; ++s)
        if (pm[s] > pm[best]) best = s;
    ViterbiResult res;
    res.terminated = (best == 0) || pm[0] == pm[best];
    unsigned s = terminated ? 0u : best;
    res.metric = pm[s];
    res.bits.assign(n, 0);
    for (std::size_t k = n; k-- > 0;) {
        res.bits[k] = static_cast<std::uint8_t>(s >> (kMemory - 1));
        s = ((s << 1) & (kStates - 1)) | from[k][s];
    }
    return res;
}

} // namespace lrfhss
