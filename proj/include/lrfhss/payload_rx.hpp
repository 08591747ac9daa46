#pragma once

#include "lrfhss/header_rx.hpp"
#include "lrfhss/modem.hpp"

namespace lrfhss {

struct PayloadRxConfig {
    int lpf_taps = 31;
    double lpf_cutoff = 0.32;
    int margin = 24;
    int fft_size = 512;
    double blank_ratio = std::numeric_limits<double>::infinity();   // fragment power over expected power that marks a CCI hit
    double gate_sigma = 4.0;        // Kalman innovation gate
    double gate_floor_hz = 3.0;
    double meas_sigma_hz = 1.0;
    double rate_drift = 2.0;        // Hz/s per sqrt(s), process noise on the Doppler rate
    double single_header_rate_sigma = 30.0;   // Hz/s, prior when only one header decoded
    SovaConfig sova{};
};

// two-state Kalman filter on the frequency offset [delta (Hz), rate (Hz/s)] at time t
struct FreqTracker {
    double t = 0, f = 0, r = 0;
    double P00 = 1, P01 = 0, P11 = 1;
    double q = 4.0;   // rate diffusion (Hz/s)^2 per second

    void predict_to(double t1)
    {
        const double dt = t1 - t;
        f += r * dt;
        P00 += 2 * dt * P01 + dt * dt * P11 + q * dt * dt * dt / 3;
        P01 += dt * P11 + q * dt * dt / 2;
        P11 += q * std::abs(dt);
        t = t1;
    }
    double predict(double t1) const { return f + r * (t1 - t); }
    double predict_sigma(double t1) const
    {
        const double dt = t1 - t;
        return std::sqrt(std::max(0.0, P00 + 2 * dt * P01 + dt * dt * P11));
    }
    void update(double z, double var)
    {
        const double S = P00 + var;
        const double k0 = P00 / S, k1 = P01 / S;
        const double e = z - f;
        f += k0 * e;
        r += k1 * e;
        const double a = P00, b = P01;
        P00 -= k0 * a;
        P01 -= k0 * b;
        P11 -= k1 * b;
    }
};

struct PayloadContext {
    HeaderInfo info;
    int n_headers = 0;
    int n_fragments = 0;
    HopPlan plan;
    double start = 0.0;        // lane index of the first header's symbol 0
    FreqTracker tracker;
    double amp = 0.0;
    double noise_var = 0.0;    // per sample after the fragment filter
    int headers_used = 0;
};

inline PayloadContext make_payload_context(const std::vector<HeaderDecodeResult>& hdrs, const PayloadRxConfig& cfg = {},
                                           const PacketConfig& pc = {})
{
    PayloadContext ctx;
    if (hdrs.empty()) throw Error("no-header", "payload context needs a decoded header");
    ctx.info = hdrs[0].info;
    ctx.n_headers = ctx.info.n_headers;
    ctx.n_fragments = fragment_count(ctx.info.payload_len, ctx.info.coding_rate);
    PacketConfig c = pc;
    c.coding_rate = ctx.info.coding_rate;
    c.n_headers = ctx.n_headers;
    ctx.plan = hop_plan_for(c, ctx.info.hop_seed, ctx.n_headers + ctx.n_fragments);
    const int hb = 2 * kHeaderSymbols;
    double s = 0, a = 0, nv = 0;
    std::vector<double> ts, ds;
    for (const auto& h : hdrs) {
        s += h.start - h.info.header_index * hb;
        a += h.amp;
        nv += h.noise_var;
        ts.push_back(h.t_centre);
        ds.push_back(h.freq_hz - ctx.plan.channel_freq(ctx.plan.channel_indices[h.info.header_index]));
    }
    const double n = double(hdrs.size());
    ctx.start = s / n;
    ctx.amp = a / n;
    ctx.noise_var = nv / n;
    ctx.headers_used = static_cast<int>(hdrs.size());
    const double tm = std::accumulate(ts.begin(), ts.end(), 0.0) / n;
    const double dm = std::accumulate(ds.begin(), ds.end(), 0.0) / n;
    double stt = 0, std_ = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        stt += (ts[i] - tm) * (ts[i] - tm);
        std_ += (ts[i] - tm) * (ds[i] - dm);
    }
    auto& kf = ctx.tracker;
    const double v = cfg.meas_sigma_hz * cfg.meas_sigma_hz;
    kf.t = tm;
    kf.f = dm;
    kf.q = cfg.rate_drift * cfg.rate_drift;
    kf.P00 = v / n;
    kf.P01 = 0;
    if (hdrs.size() >= 2 && stt > 0.01) {
        kf.r = std_ / stt;
        kf.P11 = v / stt;
    } else {
        double dr = 0;
        for (const auto& h : hdrs) dr += h.chosen_doppler;
        kf.r = dr / n;
        kf.P11 = cfg.single_header_rate_sigma * cfg.single_header_rate_sigma;
    }
    return ctx;
}

struct FragmentResult {
    Soft soft;              // 48 coded bits
    bool erased = false;    // outside the lanes or the buffer
    bool blanked = false;   // CCI power test
    bool gated = false;     // frequency measurement rejected
    int lane = 0;
    double freq_offset = 0.0;   // measured offset from the nominal channel, Hz
    double t_centre = 0.0;
};

// Fragment f: nearest lane to the predicted frequency, dechirp, filter, resample, blind residual
// frequency and phase from the squared boundary samples, then SOVA over 50 symbols.
inline FragmentResult process_fragment(const BlockStore& store, PayloadContext& ctx, int f, const PayloadRxConfig& cfg = {})
{
    FragmentResult fr;
    fr.soft.assign(kFragmentCodedBits, 0.0);
    const int b = ctx.n_headers + f;
    const double sb = ctx.start + 2.0 * (ctx.n_headers * kHeaderSymbols + f * kFragmentSymbols);
    const int ns = 2 * kFragmentSymbols;
    const double tc = store.time_of(sb + kFragmentSymbols - 0.5);
    fr.t_centre = tc;
    const double nominal = ctx.plan.channel_freq(ctx.plan.channel_indices[b]);
    const double dpred = ctx.tracker.predict(tc);
    const double sig_pred = ctx.tracker.predict_sigma(tc);
    const double rate = ctx.tracker.r;
    const double fabs = nominal + dpred;
    const int lane = static_cast<int>(std::lround(fabs / store.spacing())) + ctx.plan.n_channels / 2;
    fr.lane = lane;
    if (!store.has_channel(lane) || sb < 0 || sb + ns >= double(store.lane_length())) {
        fr.erased = true;
        return fr;
    }
    const double resid = fabs - store.channel_freq(lane);
    const long m0 = static_cast<long>(std::floor(sb)) - cfg.margin;
    const double frac = sb - std::floor(sb);
    auto seg = store.segment(lane, m0, ns + 2 * cfg.margin + 2);
    const double t_idx = double(cfg.margin) + frac + kFragmentSymbols - 0.5;
    auto y = cfo_correct_lpf(seg, resid, store.lane_rate(), cfg.lpf_taps, cfg.lpf_cutoff, t_idx, rate);
    auto x = resample(y, cfg.margin + frac, ns + 1);
    // CCI test on the received power
    double pw = 0;
    for (const auto& v : x) pw += std::norm(v);
    pw /= double(x.size());
    if (pw == 0.0) {
        fr.erased = true;
        return fr;
    }
    const double expected = ctx.amp * ctx.amp + ctx.noise_var;
    if (ctx.amp > 0 && pw > cfg.blank_ratio * expected) {
        fr.blanked = true;
        return fr;
    }
    auto xr = phase_rotate(x);
    // boundary samples squared: phase 2(theta + w (k - kc)) up to +-4 eps
    const int N = cfg.fft_size;
    std::vector<cf64> z(N), Z(N);
    const double kc = 0.5 * (kFragmentSymbols - 1);
    for (int k = 0; k < kFragmentSymbols; ++k) z[k] = xr[2 * k] * xr[2 * k];
    fft_of_size(N).execute(z.data(), Z.data());
    // search range in bins of 2w: bin i <-> 2w = 2 pi i / N rad/symbol
    const double hz_per_bin = kSymbolRate / (2.0 * N);
    const int range = std::min(N / 2 - 1, static_cast<int>(std::ceil((cfg.gate_sigma * sig_pred + cfg.gate_floor_hz) / hz_per_bin)));
    int best = 0;
    for (int i = -range; i <= range; ++i)
        if (std::norm(Z[(i + N) % N]) > std::norm(Z[(best + N) % N])) best = i;
    const double a = std::abs(Z[(best - 1 + N) % N]), c0 = std::abs(Z[(best + N) % N]), c = std::abs(Z[(best + 1 + N) % N]);
    double fb = best;
    if (a - 2 * c0 + c < 0) fb += 0.5 * (a - c) / (a - 2 * c0 + c);
    const double w = kPi * fb / N;   // rad/symbol
    cf64 acc{};
    for (int k = 0; k < kFragmentSymbols; ++k) acc += z[k] * std::polar(1.0, -2 * w * (k - kc));
    const double theta = 0.5 * std::arg(acc);
    const double meas = dpred + w / kTwoPi * kSymbolRate;
    fr.freq_offset = meas;
    // frequency measurement feeds the tracker unless it falls outside the gate
    const double innov = meas - dpred;
    if (std::abs(innov) <= cfg.gate_sigma * sig_pred + cfg.gate_floor_hz) {
        ctx.tracker.predict_to(tc);
        ctx.tracker.update(meas, cfg.meas_sigma_hz * cfg.meas_sigma_hz);
    } else {
        fr.gated = true;
    }

    std::vector<int> known(kFragmentSymbols, -1);
    known[kFragmentSymbols - 2] = 0;
    known[kFragmentSymbols - 1] = 0;
    std::array<double, 4> init;
    init.fill(-std::numeric_limits<double>::infinity());
    // no symbol before the fragment: a_{-1} = 0 matches the model with at_prev = 0, P unknown mod pi
    init[0] = 0;
    init[2] = 0;
    auto L = loop_init(theta, w, 0.0, kc, 0);
    auto r = sova4(xr, 0, kFragmentSymbols, known, init, L, cfg.sova, 0b0101u);
    for (int k = 0; k < kFragmentCodedBits; ++k) fr.soft[k] = r.soft[k];
    return fr;
}

struct PayloadResult {
    std::vector<std::uint8_t> bytes;
    bool crc_ok = false;
    Soft soft;
    int n_erased = 0;
    int n_blanked = 0;
    std::vector<FragmentResult> fragments;
};

inline PayloadResult decode_payload(const BlockStore& store, PayloadContext ctx, const PayloadRxConfig& cfg = {},
                                    Crc16Params crc = {})
{
    PayloadResult out;
    for (int f = 0; f < ctx.n_fragments; ++f) {
        auto fr = process_fragment(store, ctx, f, cfg);
        out.soft.insert(out.soft.end(), fr.soft.begin(), fr.soft.end());
        out.n_erased += fr.erased;
        out.n_blanked += fr.blanked;
        out.fragments.push_back(std::move(fr));
    }
    auto pd = decode_payload_soft(out.soft, ctx.info.payload_len, ctx.info.coding_rate, crc);
    out.bytes = std::move(pd.bytes);
    out.crc_ok = pd.crc_ok;
    return out;
}

} // namespace lrfhss
