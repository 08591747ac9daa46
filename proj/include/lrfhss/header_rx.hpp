#pragma once

#include "lrfhss/detector.hpp"
#include "lrfhss/frame.hpp"
#include "lrfhss/trellis.hpp"

#include <atomic>
#include <numeric>
#include <optional>

namespace lrfhss {

struct HeaderRxConfig {
    int lpf_taps = 31;
    double lpf_cutoff = 0.32;          // cycles per lane sample
    double timing_range = 1.5;         // lane samples either side of the detection
    double timing_step = 0.125;
    bool timing_subset = true;         // false: every clean sync symbol
    int timing_segment = 8;            // coherent segments of this many symbols, 0: lag-one-symbol differential metric
    std::vector<double> doppler_candidates{0, 80, -80, 160, -160, 240, -240, 320, -320, 400, -400};   // Hz/s
    int n_best = 3;
    int max_coded_mismatch = 80;   // CRC-passing decodes further than this from their hard decisions are rejected
    int margin = 24;                   // extra lane samples around the block
    SovaConfig sova{};
    int lane_osr = 2;
};

// counts calls of the header-side synchronisation estimators
inline std::atomic<long>& header_estimator_calls()
{
    static std::atomic<long> n{0};
    return n;
}

inline double hz_to_rad_per_symbol(double hz) { return kTwoPi * hz * kSymbolPeriod; }
inline double rate_to_rad_per_symbol2(double hz_per_s) { return kTwoPi * hz_per_s * kSymbolPeriod * kSymbolPeriod; }

// Mix by -cfo and low-pass. Sample i of the segment sits at time i / rate relative to t_ref_index.
inline std::vector<cf64> cfo_correct_lpf(std::span<const cf64> seg, double cfo_hz, double rate, int taps, double cutoff,
                                         double t_ref_index = 0.0, double doppler_rate = 0.0)
{
    std::vector<cf64> y(seg.size());
    for (std::size_t i = 0; i < seg.size(); ++i) {
        const double t = (double(i) - t_ref_index) / rate;
        y[i] = seg[i] * std::polar(1.0, -(kTwoPi * cfo_hz * t + kPi * doppler_rate * t * t));
    }
    static thread_local std::map<std::pair<int, double>, std::vector<double>> cache;
    auto& h = cache[{taps, cutoff}];
    if (h.empty()) h = lowpass_hann(taps, cutoff);
    return filter_same(y, h);
}

inline const SincInterpolator& lane_interpolator()
{
    static const SincInterpolator interp(16, 1024, 0.45, 7.0);
    return interp;
}

struct TimingEstimate {
    double tau = 0.0;       // lane samples to add to the nominal position
    double metric = 0.0;
    bool ok = false;
};

// Differential correlation of the syncword over the timing subset on a fine grid, then parabolic
// refinement. `base` is the nominal (fractional) index of header symbol 0 in x, 2 samples/symbol.
inline TimingEstimate estimate_symbol_timing(std::span<const cf64> x, double base, const HeaderRxConfig& cfg = {})
{
    ++header_estimator_calls();
    const auto& ref = sync_reference();
    const auto& interp = lane_interpolator();
    const int osr = cfg.lane_osr;
    std::vector<int> syms;
    if (cfg.timing_subset)
        syms.assign(SyncReference::kTimingSubset.begin(), SyncReference::kTimingSubset.end());
    else
        for (int k = 0; k < kSyncSymbols; ++k) syms.push_back(k);
    struct Tap {
        double off;   // sample offset from symbol 0
        cf64 dref;
        int seg;
    };
    std::vector<Tap> taps;
    const bool coherent = cfg.timing_segment > 0;
    for (int k : syms)
        for (int h = 0; h < osr; ++h) {
            const double t = kSyncStart + k + double(h) / osr;
            const double ph = coherent ? ref.phase(t) : ref.phase(t) - ref.phase(t - 1.0);
            taps.push_back({t * osr, std::polar(1.0, -ph), coherent ? k / cfg.timing_segment : 0});
        }
    const int nseg = coherent ? kSyncSymbols / cfg.timing_segment + 1 : 1;
    const int n = static_cast<int>(std::lround(2 * cfg.timing_range / cfg.timing_step)) + 1;
    std::vector<double> m(n);
    std::vector<cf64> acc(nseg);
    for (int i = 0; i < n; ++i) {
        const double tau = -cfg.timing_range + i * cfg.timing_step;
        std::fill(acc.begin(), acc.end(), cf64{});
        for (const auto& tp : taps) {
            const double pos = base + tau + tp.off;
            const cf64 v = coherent ? interp(x, pos) : interp(x, pos) * std::conj(interp(x, pos - osr));
            acc[tp.seg] += v * tp.dref;
        }
        m[i] = 0;
        for (const auto& a : acc) m[i] += std::norm(a);
    }
    const int i = static_cast<int>(std::max_element(m.begin(), m.end()) - m.begin());
    TimingEstimate te;
    te.tau = -cfg.timing_range + i * cfg.timing_step;
    te.metric = m[i];
    if (i > 0 && i + 1 < n) {
        const double den = m[i - 1] - 2 * m[i] + m[i + 1];
        if (den < 0) te.tau += 0.5 * (m[i - 1] - m[i + 1]) / den * cfg.timing_step;
    }
    te.ok = te.metric > 0;
    return te;
}

// samples x(start + n), n = 0..count-1
inline std::vector<cf64> resample(std::span<const cf64> x, double start, int count)
{
    const auto& interp = lane_interpolator();
    std::vector<cf64> y(count);
    for (int n = 0; n < count; ++n) y[n] = interp(x, start + n);
    return y;
}

// Known-symbol phase model of the rotated stream over a run of known symbols [ks, ke), with the
// parity convention P_{k0} = 0.
struct KnownModel {
    std::vector<double> t;      // sample times in symbols
    std::vector<int> idx;       // sample index (2k or 2k+1)
    std::vector<double> phase;  // rotated model phase
    int state_k0 = 0;           // trellis state entering symbol k0
};

inline KnownModel known_model(std::span<const int> known, int ks, int ke, int k0)
{
    const auto& mdl = trellis_model();
    KnownModel km;
    // parity P_k for k in [ks + 1, ke]
    std::vector<int> P(ke + 1, 0);
    P[k0] = 0;
    for (int k = k0; k < ke; ++k) P[k + 1] = P[k] ^ known[k - 1];
    for (int k = k0 - 1; k >= ks + 1; --k) P[k] = P[k + 1] ^ known[k - 1];
    for (int k = ks + 1; k < ke; ++k) {
        const int s = known[k - 1] | (P[k] << 1);
        km.t.push_back(k);
        km.idx.push_back(2 * k);
        km.phase.push_back(mdl.boundary(s, known[k]));
        km.t.push_back(k + 0.5);
        km.idx.push_back(2 * k + 1);
        km.phase.push_back(mdl.mid(s, known[k]));
    }
    km.state_k0 = known[k0 - 1] | (P[k0] << 1);
    return km;
}

struct CfoPhase {
    double w = 0.0;       // rad/symbol
    double theta = 0.0;   // rad, at t_ref
    double amp = 0.0;
    double t_ref = 0.0;
};

// Frequency from the peak of the power spectrum of the de-modulated known samples, phase from the
// matched-filter correlation at that frequency. `dr` (rad/symbol^2) dechirps around t_ref.
inline CfoPhase estimate_cfo_phase(std::span<const cf64> x, const KnownModel& km, double dr = 0.0, int fft_size = 1024,
                                   bool count = true)
{
    if (count) ++header_estimator_calls();
    CfoPhase out;
    const std::size_t N = km.t.size();
    out.t_ref = std::accumulate(km.t.begin(), km.t.end(), 0.0) / N;
    std::vector<cf64> v(fft_size), V(fft_size);
    // samples are half a symbol apart
    for (std::size_t n = 0; n < N; ++n) {
        const double d = km.t[n] - out.t_ref;
        v[n] = x[km.idx[n]] * std::polar(1.0, -(km.phase[n] + 0.5 * dr * d * d));
    }
    fft_of_size(fft_size).execute(v.data(), V.data());
    int k = 0;
    for (int i = 1; i < fft_size; ++i)
        if (std::norm(V[i]) > std::norm(V[k])) k = i;
    const double a = std::abs(V[(k + fft_size - 1) % fft_size]), b = std::abs(V[k]), c = std::abs(V[(k + 1) % fft_size]);
    double frac = 0;
    if (a - 2 * b + c < 0) frac = 0.5 * (a - c) / (a - 2 * b + c);
    double kk = k + frac;
    if (kk >= fft_size / 2.0) kk -= fft_size;
    out.w = kTwoPi * kk / fft_size * 2.0;
    cf64 acc{};
    for (std::size_t n = 0; n < N; ++n) {
        const double d = km.t[n] - out.t_ref;
        acc += x[km.idx[n]] * std::polar(1.0, -(km.phase[n] + 0.5 * dr * d * d + out.w * d));
    }
    out.theta = std::arg(acc);
    out.amp = std::abs(acc) / N;
    return out;
}

// Synchronised header samples: 229 samples at 2/symbol, sample 2k on symbol boundary k.
struct HeaderSamples {
    std::vector<cf64> x;
    int channel = 0;
    double start = 0.0;       // fractional lane index of symbol 0
    double cfo_hz = 0.0;      // removed before filtering, relative to the lane centre
    TimingEstimate timing;
    double noise_var = 0.0;   // per-sample noise after the filter
};

inline std::vector<int> header_known_symbols()
{
    std::vector<int> known(kHeaderSymbols, -1);
    auto sb = syncword_bits();
    for (int i = 0; i < kSyncSymbols; ++i) known[kSyncStart + i] = sb[i];
    known[kHeaderSymbols - 2] = 0;
    known[kHeaderSymbols - 1] = 0;
    return known;
}

inline std::optional<HeaderSamples> synchronize_header(const BlockStore& store, const DetectionRecord& det,
                                                       const HeaderRxConfig& cfg = {}, double lane_noise = 0.0)
{
    const int osr = cfg.lane_osr;
    const long m0 = det.start_sample - cfg.margin;
    const long len = kHeaderSymbols * osr + 2 * cfg.margin + 1;
    auto seg = store.segment(det.channel, m0, len);
    auto y = cfo_correct_lpf(seg, det.coarse_cfo, store.lane_rate(), cfg.lpf_taps, cfg.lpf_cutoff);
    const double base = cfg.margin;
    auto te = estimate_symbol_timing(y, base, cfg);
    if (!te.ok) return std::nullopt;
    HeaderSamples hs;
    hs.channel = det.channel;
    hs.start = double(det.start_sample) + te.tau;
    hs.cfo_hz = det.coarse_cfo;
    hs.timing = te;
    hs.x = resample(y, base + te.tau, kHeaderSymbols * osr + 1);
    static thread_local std::map<std::pair<int, double>, double> gain;
    auto& g = gain[{cfg.lpf_taps, cfg.lpf_cutoff}];
    if (g == 0.0)
        for (double v : lowpass_hann(cfg.lpf_taps, cfg.lpf_cutoff)) g += v * v;
    hs.noise_var = lane_noise * g;
    return hs;
}

struct DirectionResult {
    SovaResult sova;
    CfoPhase est;
};

struct HeaderCandidate {
    double doppler = 0.0;     // Hz/s
    DirectionResult fwd, bwd;
    double metric = 0.0;
    Soft soft80;              // transmitted order
};

struct HeaderDecodeResult {
    HeaderInfo info;
    bool crc_ok = false;
    double chosen_doppler = 0.0;
    double best_metric = 0.0;
    int channel = 0;
    double start = 0.0;        // lane index of header symbol 0
    double t_start = 0.0;      // seconds
    double freq_hz = 0.0;      // absolute signal frequency at t_centre
    double t_centre = 0.0;
    double amp = 0.0;
    double noise_var = 0.0;
    int coded_mismatch = 0;    // hard decisions that disagree with the re-encoded header
    Soft soft80;
};

// Forward search over [57, 114) and backward search over the conjugated, time-reversed header
// from the same point towards symbol 0, for each Doppler candidate.
inline std::vector<HeaderCandidate> header_sova(std::span<const cf64> hx, const HeaderRxConfig& cfg = {})
{
    constexpr int k0 = 57;
    const int n2 = kHeaderSymbols * 2;
    auto known = header_known_symbols();
    // one extra backward step reaches the boundary sample at t = 0; its symbol is free
    std::vector<int> known_r(kHeaderSymbols + 1, -1);
    for (int k = 0; k < kHeaderSymbols; ++k) known_r[k] = known[kHeaderSymbols - 1 - k];

    std::vector<cf64> xf(hx.begin(), hx.begin() + n2);
    xf = phase_rotate(xf);
    std::vector<cf64> xr(n2 + 2);
    for (int n = 0; n <= n2; ++n) xr[n] = std::conj(hx[n2 - n]);
    xr = phase_rotate(xr);

    const auto kmf = known_model(known, kSyncStart, kSyncEnd, k0);
    const int rs = kHeaderSymbols - kSyncEnd, re = kHeaderSymbols - kSyncStart;
    const auto kmr = known_model(known_r, rs, re, k0);

    std::vector<HeaderCandidate> out;
    ++header_estimator_calls();
    for (double cand : cfg.doppler_candidates) {
        HeaderCandidate hc;
        hc.doppler = cand;
        const double dr = rate_to_rad_per_symbol2(cand);
        for (int dir = 0; dir < 2; ++dir) {
            const auto& x = dir == 0 ? xf : xr;
            const auto& km = dir == 0 ? kmf : kmr;
            const auto& kn = dir == 0 ? known : known_r;
            // time reversal with conjugation keeps the frequency and negates the Doppler rate
            const double d = dir == 0 ? dr : -dr;
            auto est = estimate_cfo_phase(x, km, d, 1024, false);
            std::array<double, 4> init;
            init.fill(-std::numeric_limits<double>::infinity());
            init[km.state_k0] = 0.0;
            auto L = loop_init(est.theta, est.w, d, est.t_ref, k0);
            unsigned end_mask = dir == 0 ? 0b0101u : 0xFu;
            auto r = sova4(x, k0, dir == 0 ? kHeaderSymbols : kHeaderSymbols + 1, kn, init, L, cfg.sova, end_mask);
            (dir == 0 ? hc.fwd : hc.bwd) = {std::move(r), est};
        }
        hc.metric = hc.fwd.sova.metric + hc.bwd.sova.metric;
        // forward covers header symbols 57..113, backward covers 56..0 (reversed index 57..113)
        hc.soft80.assign(kHeaderCodedBits, 0.0);
        for (int j = 0; j < kHeaderCodedBits; ++j) {
            const int k = header_coded_position(j);
            if (k >= k0)
                hc.soft80[j] = hc.fwd.sova.soft[k - k0];
            else
                hc.soft80[j] = hc.bwd.sova.soft[(kHeaderSymbols - 1 - k) - k0];
        }
        out.push_back(std::move(hc));
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.metric != b.metric) return a.metric > b.metric;
        return std::abs(a.doppler) < std::abs(b.doppler);
    });
    return out;
}

inline HeaderDecodeResult decode_header(const BlockStore& store, const DetectionRecord& det, const HeaderRxConfig& cfg = {},
                                        double lane_noise = 0.0)
{
    HeaderDecodeResult res;
    res.channel = det.channel;
    auto hs = synchronize_header(store, det, cfg, lane_noise);
    if (!hs) return res;
    res.start = hs->start;
    res.t_start = store.time_of(hs->start);
    res.noise_var = hs->noise_var;
    auto cands = header_sova(hs->x, cfg);
    if (cands.empty()) return res;
    res.best_metric = cands[0].metric;
    const int nb = std::min<int>(cfg.n_best, static_cast<int>(cands.size()));
    int pick = 0;
    for (int i = 0; i < nb; ++i) {
        auto hp = decode_header_soft(cands[i].soft80);
        if (!hp.crc_ok) continue;
        auto tx = interleave_header<std::uint8_t>(encode_header(hp.info));
        int mis = 0;
        for (int j = 0; j < kHeaderCodedBits; ++j) mis += (cands[i].soft80[j] > 0) != (tx[j] == 1);
        res.coded_mismatch = mis;
        if (mis <= cfg.max_coded_mismatch) {
            res.info = hp.info;
            res.crc_ok = true;
            pick = i;
            break;
        }
    }
    const auto& c = cands[pick];
    res.chosen_doppler = c.doppler;
    res.soft80 = c.soft80;
    const auto& e = c.fwd.est;
    res.t_centre = store.time_of(hs->start + 2 * e.t_ref);
    res.freq_hz = store.channel_freq(det.channel) + hs->cfo_hz + e.w / (kTwoPi * kSymbolPeriod);
    res.amp = e.amp;
    return res;
}

} // namespace lrfhss
