#pragma once

#include "lrfhss/dsp.hpp"
#include "lrfhss/modem.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace lrfhss {

struct ImpairmentProfile {
    double initial_sto = 0.0;     // fraction of a symbol, 0..1/4
    double sfo_ppm = 0.0;         // 0..80
    double cfo_frac = 0.0;        // fraction of the symbol rate, 0..5/6
    double doppler_rate = 0.0;    // Hz/s, -400..400
    double initial_phase = 0.0;   // degrees
    double esno_db = std::numeric_limits<double>::infinity();
    double cci_ratio = 0.0;       // fraction of hopping blocks overlapped, 0..0.6
    double cci_power_db = 0.0;    // interferer power relative to the victim
    std::uint64_t rng_seed = 0;

    double cfo_hz() const { return cfo_frac * kSymbolRate; }

    void validate() const
    {
        auto in = [](double v, double lo, double hi) { return v >= lo - 1e-12 && v <= hi + 1e-12; };
        if (!in(initial_sto, 0, 1) || !in(sfo_ppm, -100, 100) || !in(cfo_frac, -1, 1) ||
            !in(doppler_rate, -1000, 1000) || !in(cci_ratio, 0, 1) || std::isnan(esno_db))
            throw Error("bad-profile", "impairment value out of range");
    }
};

inline double samples_per_symbol(const IqBuffer& iq) { return iq.sample_rate / kSymbolRate; }

// multiply by e^{j phase(n)} for a quadratic phase; exact every 256 samples, recursive in between
template <class PhaseFn>
inline void rotate_quadratic(IqBuffer& iq, PhaseFn phase)
{
    const std::size_t n = iq.size();
    for (std::size_t b = 0; b < n; b += 256) {
        const std::size_t e = std::min(n, b + 256);
        const double p0 = phase(b), p1 = phase(b + 1), p2 = phase(b + 2);
        cf64 ph = std::polar(1.0, std::fmod(p0, kTwoPi));
        cf64 step = std::polar(1.0, std::fmod(p1 - p0, kTwoPi));
        const cf64 curv = std::polar(1.0, std::fmod((p2 - p1) - (p1 - p0), kTwoPi));
        for (std::size_t k = b; k < e; ++k) {
            iq.samples[k] *= ph;
            ph *= step;
            step *= curv;
        }
    }
}

// f(t) = rate*t, theta(t) = pi*rate*t^2 on the buffer's absolute time axis
inline IqBuffer apply_doppler(IqBuffer iq, double rate)
{
    if (rate == 0.0) return iq;
    rotate_quadratic(iq, [&](std::size_t k) {
        const double t = iq.time_of(double(k));
        return kPi * rate * t * t;
    });
    return iq;
}

inline IqBuffer apply_cfo_phase(IqBuffer iq, double cfo_hz, double phase_deg)
{
    if (cfo_hz == 0.0 && phase_deg == 0.0) return iq;
    const double ph0 = phase_deg * kPi / 180.0;
    rotate_quadratic(iq, [&](std::size_t k) { return kTwoPi * cfo_hz * iq.time_of(double(k)) + ph0; });
    return iq;
}

// output sample k is the input at position k*(1 + ppm*1e-6) + sto*osr
inline IqBuffer apply_sfo(const IqBuffer& iq, double ppm, double initial_sto)
{
    if (ppm == 0.0 && initial_sto == 0.0) return iq;
    const double scale = 1.0 + ppm * 1e-6;
    const double off = initial_sto * samples_per_symbol(iq);
    IqBuffer out;
    out.sample_rate = iq.sample_rate;
    out.t0 = iq.t0;
    out.samples.resize(iq.size());
    const double ioff = std::round(off);
    if (ppm == 0.0 && std::abs(off - ioff) < 1e-12) {
        // whole-sample shift, no interpolation needed
        const long s = static_cast<long>(ioff);
        for (long k = 0; k < static_cast<long>(iq.size()); ++k) {
            long j = k + s;
            out.samples[k] = (j >= 0 && j < static_cast<long>(iq.size())) ? iq.samples[j] : cf64{};
        }
        return out;
    }
    static const SincInterpolator interp;
    for (std::size_t k = 0; k < iq.size(); ++k) out.samples[k] = interp(iq.samples, double(k) * scale + off);
    return out;
}

// per-sample complex noise variance = osr / (Es/N0) for unit-power samples
inline double noise_variance(double esno_db, double osr) { return osr / db_to_lin(esno_db); }

inline IqBuffer apply_awgn(IqBuffer iq, double esno_db, std::uint64_t seed)
{
    if (std::isinf(esno_db) && esno_db > 0) return iq;
    const double sigma = std::sqrt(0.5 * noise_variance(esno_db, samples_per_symbol(iq)));
    boost::random::mt19937_64 rng(mix_seed(seed));
    boost::random::normal_distribution<double> nd(0.0, sigma);
    for (auto& s : iq.samples) {
        const double re = nd(rng);
        const double im = nd(rng);
        s += cf64(re, im);
    }
    return iq;
}

// number of victim blocks an overlap ratio selects
inline int cci_block_count(double ratio, int n_blocks)
{
    return std::clamp(static_cast<int>(std::floor(ratio * n_blocks + 0.5)), 0, n_blocks);
}

// Chooses round(ratio * N) victim blocks uniformly and adds an equal-power GMSK burst
// of random data on the same channel over each one. Returns the hit block indices.
inline std::vector<int> inject_cci(IqBuffer& victim, const std::vector<BlockSpan>& blocks, double ratio,
                                   std::uint64_t seed, double power_db = 0.0, double max_offset_hz = kSymbolRate / 8)
{
    const int n = static_cast<int>(blocks.size());
    const int k = cci_block_count(ratio, n);
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, 0x636369));
    for (int i = 0; i < k; ++i) {
        int j = i + static_cast<int>(rng() % (n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());

    GmskParams gp;
    const double osr = samples_per_symbol(victim);
    gp.osr = static_cast<int>(std::lround(osr));
    const double amp = std::sqrt(db_to_lin(power_db));
    std::uniform_real_distribution<double> uoff(-max_offset_hz, max_offset_hz), uph(0.0, kTwoPi);
    for (int b : idx) {
        const auto& s = blocks[b];
        const std::size_t nsym = s.length / gp.osr;
        Bits bits(nsym);
        for (auto& x : bits) x = rng() & 1u;
        auto ph = phase_trajectory(bits_to_symbols(bits), gp);
        const double f = s.freq_hz + uoff(rng);
        const double ph0 = uph(rng);
        const double w = kTwoPi * f / victim.sample_rate;
        for (std::size_t m = 0; m < ph.size() && s.start + m < victim.size(); ++m) {
            const double carrier = std::fmod(w * double(s.start + m), kTwoPi);
            victim.samples[s.start + m] += amp * std::polar(1.0, ph[m] + carrier + ph0);
        }
    }
    return idx;
}

struct ChannelOutput {
    IqBuffer iq;
    std::vector<int> cci_blocks;
};

// Doppler -> CFO/phase -> SFO/STO -> CCI -> AWGN
inline ChannelOutput apply_channel(const IqBuffer& in, const ImpairmentProfile& prof, const std::vector<BlockSpan>& blocks = {})
{
    prof.validate();
    ChannelOutput out;
    out.iq = apply_doppler(in, prof.doppler_rate);
    out.iq = apply_cfo_phase(std::move(out.iq), prof.cfo_hz(), prof.initial_phase);
    out.iq = apply_sfo(out.iq, prof.sfo_ppm, prof.initial_sto);
    if (prof.cci_ratio > 0.0 && !blocks.empty())
        out.cci_blocks = inject_cci(out.iq, blocks, prof.cci_ratio, derive_seed(prof.rng_seed, 1), prof.cci_power_db);
    out.iq = apply_awgn(std::move(out.iq), prof.esno_db, derive_seed(prof.rng_seed, 2));
    return out;
}

} // namespace lrfhss
