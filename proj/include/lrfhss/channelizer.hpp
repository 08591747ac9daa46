#pragma once

#include "lrfhss/dsp.hpp"
#include "lrfhss/fft.hpp"

#include <span>

namespace lrfhss {

struct ChannelizerConfig {
    int fft_size = 128;          // M, bin spacing = fs / M
    int taps_per_branch = 8;     // prototype length = taps_per_branch * M + 1
    double cutoff_bins = 1.1;    // prototype -6 dB point, in bins
    double kaiser_beta = 7.0;
    int out_osr = 2;             // lane samples per symbol
    int n_channels = 80;         // N_CF
    int guard_lanes = 4;         // extra lanes kept on each side of the OCW
    double bin_spacing_hz = kSymbolRate;

    int hop() const { return fft_size / out_osr; }
};

// Per-channel lanes at out_osr samples/symbol.
// Lane j holds channel (j - guard), centred on (channel - N_CF/2) * bin spacing.
// Lane sample m is aligned with wideband sample m * hop.
class BlockStore {
public:
    BlockStore() = default;
    BlockStore(int n_lanes, std::size_t lane_len, int first_channel, int n_channels, double lane_rate, double spacing, double t0)
        : n_lanes_(n_lanes), len_(lane_len), first_(first_channel), n_channels_(n_channels), rate_(lane_rate),
          spacing_(spacing), t0_(t0), data_(static_cast<std::size_t>(n_lanes) * lane_len)
    {
    }

    int n_lanes() const { return n_lanes_; }
    std::size_t lane_length() const { return len_; }
    double lane_rate() const { return rate_; }
    double t0() const { return t0_; }
    double time_of(double m) const { return t0_ + m / rate_; }
    int first_channel() const { return first_; }
    int last_channel() const { return first_ + n_lanes_ - 1; }
    bool has_channel(int c) const { return c >= first_ && c <= last_channel(); }
    double channel_freq(int c) const { return (c - n_channels_ / 2) * spacing_; }
    double spacing() const { return spacing_; }

    // time priority view
    std::span<const cf64> lane(int channel) const
    {
        return {data_.data() + static_cast<std::size_t>(channel - first_) * len_, len_};
    }
    std::span<cf64> lane_mut(int channel)
    {
        return {data_.data() + static_cast<std::size_t>(channel - first_) * len_, len_};
    }
    // frequency priority view: all lanes at one instant
    std::vector<cf64> snapshot(std::size_t m) const
    {
        std::vector<cf64> s(n_lanes_);
        for (int j = 0; j < n_lanes_; ++j) s[j] = data_[static_cast<std::size_t>(j) * len_ + m];
        return s;
    }
    // samples [m0, m0 + n) of a lane, zero outside
    std::vector<cf64> segment(int channel, long m0, long n) const
    {
        std::vector<cf64> out(n);
        if (!has_channel(channel)) return out;
        auto l = lane(channel);
        for (long i = 0; i < n; ++i) {
            long m = m0 + i;
            if (m >= 0 && m < static_cast<long>(len_)) out[i] = l[m];
        }
        return out;
    }

private:
    int n_lanes_ = 0;
    std::size_t len_ = 0;
    int first_ = 0, n_channels_ = 0;
    double rate_ = 0, spacing_ = 0, t0_ = 0;
    std::vector<cf64> data_;
};

// Kaiser-windowed sinc, odd length P*M+1, unit DC gain
inline std::vector<double> channelizer_prototype(const ChannelizerConfig& c)
{
    const int M = c.fft_size;
    const int N = c.taps_per_branch * M + 1;
    const double fc = c.cutoff_bins / M;   // cycles/sample
    const double mid = 0.5 * (N - 1);
    std::vector<double> h(N);
    double sum = 0;
    for (int n = 0; n < N; ++n) {
        h[n] = 2 * fc * sinc(2 * fc * (n - mid)) * kaiser(n - mid, mid + 1, c.kaiser_beta);
        sum += h[n];
    }
    for (auto& v : h) v /= sum;
    return h;
}

// prototype magnitude response at a frequency offset given in bins
inline double prototype_response(const std::vector<double>& h, int M, double bins)
{
    cf64 acc{};
    for (std::size_t n = 0; n < h.size(); ++n) acc += h[n] * std::polar(1.0, -kTwoPi * bins * double(n) / M);
    return std::abs(acc);
}

// WOLA filter bank: y_b[m] = sum_n h[n] x[mD + c - n] e^{-j2pi b (mD + c - n)/M}, c = (N-1)/2
inline BlockStore channelize(const IqBuffer& iq, const ChannelizerConfig& cfg = {})
{
    const int M = cfg.fft_size;
    const int D = cfg.hop();
    if (M % cfg.out_osr != 0) throw Error("bad-config", "fft_size must be a multiple of out_osr");
    if (std::abs(iq.sample_rate - M * cfg.bin_spacing_hz) > 1e-6 * iq.sample_rate)
        throw Error("rate-mismatch", "sample rate must equal fft_size x bin spacing");
    if (cfg.n_channels + 2 * cfg.guard_lanes > M) throw Error("bad-config", "more lanes than bins");

    const auto h = channelizer_prototype(cfg);
    const int N = static_cast<int>(h.size());
    const long c = (N - 1) / 2;
    const std::size_t len = (iq.size() + D - 1) / D;
    const int n_lanes = cfg.n_channels + 2 * cfg.guard_lanes;
    const int first = -cfg.guard_lanes;
    BlockStore store(n_lanes, len, first, cfg.n_channels, iq.sample_rate / D, cfg.bin_spacing_hz, iq.t0);

    std::vector<int> lane_bin(n_lanes);
    for (int j = 0; j < n_lanes; ++j) lane_bin[j] = (((first + j) - cfg.n_channels / 2) % M + M) % M;
    // e^{-j2pi b c / M} is constant per bin
    std::vector<cf64> crot(M);
    for (int b = 0; b < M; ++b) crot[b] = std::polar(1.0, -kTwoPi * double(b) * double(c % M) / M);

    const Fft& ifft = fft_of_size(M, true);
    std::vector<cf64> u(M), U(M);
    const long nx = static_cast<long>(iq.size());
    const cf64* x = iq.samples.data();
    for (std::size_t m = 0; m < len; ++m) {
        std::fill(u.begin(), u.end(), cf64{});
        const long base = static_cast<long>(m) * D + c;
        // n runs over taps with base - n inside the buffer
        const long n0 = std::max(0L, base - (nx - 1)), n1 = std::min<long>(N - 1, base);
        int r = static_cast<int>(n0 % M);
        for (long n = n0; n <= n1; ++n) {
            u[r] += h[n] * x[base - n];
            if (++r == M) r = 0;
        }
        ifft.execute(u.data(), U.data());
        // e^{-j2pi b mD/M} = e^{-j2pi b m / out_osr}
        for (int j = 0; j < n_lanes; ++j) {
            const int b = lane_bin[j];
            const int ph = static_cast<int>((static_cast<long long>(b) * static_cast<long long>(m)) % cfg.out_osr);
            cf64 rot = ph == 0 ? cf64(1, 0) : std::polar(1.0, -kTwoPi * ph / cfg.out_osr);
            store.lane_mut(first + j)[m] = U[b] * crot[b] * rot;
        }
    }
    return store;
}

} // namespace lrfhss
