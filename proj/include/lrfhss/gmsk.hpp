#pragma once

#include "lrfhss/common.hpp"

#include <span>

namespace lrfhss {

struct GmskParams {
    double symbol_rate = kSymbolRate;
    double bt = 1.0;
    int span = 3;   // phase pulse support in symbols
    int osr = 4;    // samples per symbol
};

// Phase pulse q(t), t in symbol periods, pulse centred on 0.
// Gaussian-filtered rectangular frequency pulse, truncated to +-span/2 and renormalised so that
// q rises monotonically from 0 to exactly pi/2.
class PhasePulse {
public:
    explicit PhasePulse(double bt = 1.0, int span = 3) : half_(0.5 * span)
    {
        sigma_ = std::sqrt(std::log(2.0)) / (kTwoPi * bt);
        lo_ = raw(-half_);
        hi_ = raw(half_);
    }

    double operator()(double t) const
    {
        if (t <= -half_) return 0.0;
        if (t >= half_) return 0.5 * kPi;
        return 0.5 * kPi * (raw(t) - lo_) / (hi_ - lo_);
    }

    double half_span() const { return half_; }

private:
    // integral of the unit-area frequency pulse from -inf to t
    double raw(double t) const { return G(t + 0.5) - G(t - 0.5); }
    double G(double x) const
    {
        const double z = x / sigma_;
        const double Phi = 0.5 * std::erfc(-z / std::sqrt(2.0));
        const double phi = std::exp(-0.5 * z * z) / std::sqrt(kTwoPi);
        return x * Phi + sigma_ * phi;
    }

    double half_, sigma_, lo_, hi_;
};

// q(t - 1/2) sampled on the grid m/osr for m in [-osr*(span-1)/2 .. ), indexed by m + offset
struct PulseTable {
    int osr = 0;
    int first = 0;  // first symbol offset with nonzero support, relative to the current symbol
    std::vector<double> q;

    PulseTable(const GmskParams& p)
        : osr(p.osr)
    {
        PhasePulse pulse(p.bt, p.span);
        // symbol i occupies [i + 1/2 - span/2, i + 1/2 + span/2) in symbol time
        first = static_cast<int>(std::floor(0.5 - 0.5 * p.span));
        const int n = (p.span + 1) * osr + 1;
        q.resize(n);
        for (int m = 0; m < n; ++m) q[m] = pulse(double(m + first * osr) / osr - 0.5);
    }

    // phase contribution of a symbol that started `m` samples ago (m may be negative)
    double at(int m) const
    {
        int idx = m - first * osr;
        if (idx < 0) return 0.0;
        if (idx >= static_cast<int>(q.size())) return 0.5 * kPi;
        return q[idx];
    }
};

// Continuous-phase trajectory sum_i a_i q(t - i - 1/2) sampled at n/osr, n = 0..N*osr-1.
// `a` may hold any real values (superposition checks use 0 as "no symbol").
inline std::vector<double> phase_trajectory(std::span<const double> a, const GmskParams& p)
{
    PulseTable tab(p);
    const int osr = p.osr;
    const int nsym = static_cast<int>(a.size());
    std::vector<double> phase(static_cast<std::size_t>(nsym) * osr);
    const int reach = -tab.first + 1;  // symbols still inside their pulse behind the current one
    double settled = 0.0;              // symbols whose pulses are complete
    int settled_upto = 0;
    for (int k = 0; k < nsym; ++k) {
        while (settled_upto < k - reach) settled += 0.5 * kPi * a[settled_upto++];
        for (int s = 0; s < osr; ++s) {
            const int n = k * osr + s;
            double ph = settled;
            for (int i = settled_upto; i < nsym && i <= k - tab.first + 1; ++i) ph += a[i] * tab.at(n - i * osr);
            phase[n] = ph;
        }
    }
    return phase;
}

inline std::vector<double> bits_to_symbols(std::span<const std::uint8_t> bits)
{
    std::vector<double> a(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) a[i] = bits[i] ? 1.0 : -1.0;
    return a;
}

inline IqBuffer gmsk_modulate(std::span<const std::uint8_t> bits, const GmskParams& p = {})
{
    auto a = bits_to_symbols(bits);
    auto ph = phase_trajectory(a, p);
    IqBuffer out;
    out.sample_rate = p.osr * p.symbol_rate;
    out.samples.resize(ph.size());
    for (std::size_t n = 0; n < ph.size(); ++n)
        out.samples[n] = std::polar(1.0, ph[n]);
    return out;
}

} // namespace lrfhss
