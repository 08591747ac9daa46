#pragma once

#include "lrfhss/channelizer.hpp"
#include "lrfhss/sync.hpp"

#include <algorithm>
#include <map>

namespace lrfhss {

struct DetectorConfig {
    // decision statistic |C|^2 / (K sigma^4); exponential with unit mean on white noise
    double threshold = 22.0;
    int lag = 2;                 // differential lag in lane samples (one symbol at 2 sps)
    int guard_lanes = 2;         // cross-lane suppression radius
    int guard_samples = 2 * kHeaderSymbols - 1;   // suppression radius in time (one header)
    int peak_radius = 4;         // local-maximum radius before ranking
    int cfo_fft_size = 2048;
    double noise_floor_rel = 1e-2;   // lower bound on the noise estimate relative to the strongest lane
    double min_coherence = 0.2;      // coherent sync match over window energy, rejects data fragments
};

struct DetectionRecord {
    int channel = 0;             // lane channel index
    long start_sample = 0;       // lane sample of header symbol 0
    double coarse_cfo = 0.0;     // Hz, relative to the lane centre
    double corr_peak = 0.0;      // normalized differential correlation, 0..1
    double metric = 0.0;         // decision statistic
    double coherent = 0.0;       // sync matched-filter power at the best frequency, used for ranking
};

inline double coarse_cfo_step(const BlockStore& s, int fft_size) { return s.lane_rate() / fft_size; }

// Robust per-sample noise power: median |y|^2 over all lanes / ln 2
inline double estimate_noise_floor(const BlockStore& s, double rel_floor = 1e-2)
{
    std::vector<double> p;
    const std::size_t step = std::max<std::size_t>(1, s.lane_length() * s.n_lanes() / 200000);
    double pmax = 0;
    for (int c = s.first_channel(); c <= s.last_channel(); ++c) {
        auto l = s.lane(c);
        double acc = 0;
        for (std::size_t m = 0; m < l.size(); ++m) {
            const double v = std::norm(l[m]);
            acc += v;
            if (m % step == 0) p.push_back(v);
        }
        if (!l.empty()) pmax = std::max(pmax, acc / l.size());
    }
    if (p.empty()) return 0.0;
    auto mid = p.begin() + p.size() / 2;
    std::nth_element(p.begin(), mid, p.end());
    return std::max(*mid / std::log(2.0), rel_floor * pmax);
}

namespace detail {

struct SyncDiffRef {
    int n0 = 0;                    // first lane sample (header relative) of the differential window
    std::vector<cf64> d;           // s[n] conj(s[n - lag])
    std::vector<cf64> s;           // clean sync waveform from first_clean_sample
    int s0 = 0;
};

inline const SyncDiffRef& sync_diff_ref(int lag, int osr = 2)
{
    static thread_local std::map<std::pair<int, int>, SyncDiffRef> cache;
    auto& r = cache[{lag, osr}];
    if (r.d.empty()) {
        const auto& ref = sync_reference();
        r.s0 = SyncReference::first_clean_sample(osr);
        const int e = SyncReference::end_clean_sample(osr);
        for (int n = r.s0; n < e; ++n) r.s.push_back(ref.waveform(double(n) / osr));
        r.n0 = r.s0 + lag;
        for (int n = r.n0; n < e; ++n) r.d.push_back(r.s[n - r.s0] * std::conj(r.s[n - lag - r.s0]));
    }
    return r;
}

} // namespace detail

struct CfoPeak {
    double hz = 0.0;
    double power = 0.0;   // |sum y conj(s) e^{-j2pi f n}|^2 at the peak
};

// FFT peak of y * conj(sync reference) over the clean sync samples
inline CfoPeak coarse_cfo_peak(const BlockStore& s, int channel, long start_sample, int fft_size = 2048)
{
    const auto& r = detail::sync_diff_ref(2);
    std::vector<cf64> w(fft_size);
    auto seg = s.segment(channel, start_sample + r.s0, static_cast<long>(r.s.size()));
    for (std::size_t n = 0; n < seg.size(); ++n) w[n] = seg[n] * std::conj(r.s[n]);
    std::vector<cf64> W(fft_size);
    fft_of_size(fft_size).execute(w.data(), W.data());
    int k = 0;
    double best = -1;
    for (int i = 0; i < fft_size; ++i) {
        const double v = std::norm(W[i]);
        if (v > best) {
            best = v;
            k = i;
        }
    }
    if (k >= fft_size / 2) k -= fft_size;
    return {k * coarse_cfo_step(s, fft_size), best};
}

inline double coarse_cfo(const BlockStore& s, int channel, long start_sample, int fft_size = 2048)
{
    return coarse_cfo_peak(s, channel, start_sample, fft_size).hz;
}

// Differential sync correlation on every lane, thresholding and non-maximum suppression.
inline std::vector<DetectionRecord> detect_headers(const BlockStore& s, const DetectorConfig& cfg = {})
{
    std::vector<DetectionRecord> out;
    const long L = static_cast<long>(s.lane_length());
    const auto& r = detail::sync_diff_ref(cfg.lag);
    const long K = static_cast<long>(r.d.size());
    if (L < r.n0 + K) return out;
    const double sigma2 = estimate_noise_floor(s, cfg.noise_floor_rel);
    if (!(sigma2 > 0)) return out;
    const double norm = 1.0 / (double(K) * sigma2 * sigma2);

    int F = 1;
    while (F < L + K) F <<= 1;
    const Fft& fwd = fft_of_size(F);
    const Fft& inv = fft_of_size(F, true);
    std::vector<cf64> dref(F), R(F);
    for (long k = 0; k < K; ++k) dref[k] = r.d[k];
    fwd.execute(dref.data(), R.data());

    std::vector<cf64> z(F), Z(F), c(F);
    std::vector<DetectionRecord> cand;
    const long mmax = L - (r.n0 + K);   // last start with a full window
    for (int ch = s.first_channel(); ch <= s.last_channel(); ++ch) {
        auto y = s.lane(ch);
        std::fill(z.begin(), z.end(), cf64{});
        double e = 0;
        for (long n = cfg.lag; n < L; ++n) {
            z[n] = y[n] * std::conj(y[n - cfg.lag]);
            e += std::norm(z[n]);
        }
        if (e == 0.0) continue;
        fwd.execute(z.data(), Z.data());
        for (int i = 0; i < F; ++i) Z[i] *= std::conj(R[i]);
        inv.execute(Z.data(), c.data());
        // c[j] / F = sum_k z[j + k] conj(d[k]); window for start m begins at j = m + n0
        std::vector<double> D(mmax + 1);
        for (long m = 0; m <= mmax; ++m) D[m] = std::norm(c[m + r.n0] / double(F)) * norm;
        for (long m = 0; m <= mmax; ++m) {
            if (D[m] < cfg.threshold) continue;
            bool peak = true;
            for (long j = std::max(0L, m - cfg.peak_radius); j <= std::min(mmax, m + cfg.peak_radius) && peak; ++j)
                if (D[j] > D[m] || (D[j] == D[m] && j < m)) peak = false;
            if (!peak) continue;
            DetectionRecord rec;
            rec.channel = ch;
            rec.start_sample = m;
            rec.metric = D[m];
            double ez = 0;
            for (long k = 0; k < K; ++k) ez += std::norm(z[m + r.n0 + k]);
            rec.corr_peak = std::abs(c[m + r.n0] / double(F)) / std::sqrt(ez * double(K));
            // differential sidelobes of the syncword are strong; rank by the coherent match
            auto pk = coarse_cfo_peak(s, ch, m, cfg.cfo_fft_size);
            rec.coarse_cfo = pk.hz;
            rec.coherent = pk.power;
            double es = 0;
            for (long k = 0; k < static_cast<long>(r.s.size()); ++k) es += std::norm(y[m + r.s0 + k]);
            if (pk.power < cfg.min_coherence * double(r.s.size()) * es) continue;
            cand.push_back(rec);
        }
    }
    std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) { return a.coherent > b.coherent; });
    for (const auto& c0 : cand) {
        bool keep = true;
        for (const auto& o : out)
            if (std::abs(o.channel - c0.channel) <= cfg.guard_lanes && std::abs(o.start_sample - c0.start_sample) <= cfg.guard_samples)
                keep = false;
        if (keep) out.push_back(c0);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.start_sample != b.start_sample ? a.start_sample < b.start_sample : a.channel < b.channel;
    });
    return out;
}

} // namespace lrfhss
