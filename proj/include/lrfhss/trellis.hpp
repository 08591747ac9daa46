#pragma once

#include "lrfhss/gmsk.hpp"

#include <array>
#include <limits>
#include <span>

namespace lrfhss {

// Phase values of the GMSK pulse that enter the reduced trellis.
struct GmskTrellisModel {
    double q_half, eps, q_one, q_zero;

    explicit GmskTrellisModel(double bt = 1.0, int span = 3)
    {
        PhasePulse q(bt, span);
        q_half = q(0.5);
        eps = q(-0.5);
        q_one = q(1.0);
        q_zero = q(0.0);
    }

    // 4-state rotated model. State s = at_prev + 2 P, at_prev in {0,1} is the previous symbol, P the
    // parity of all older symbols. `at` is the current symbol (0/1).
    double boundary(int s, int at) const
    {
        const int ap = s & 1, P = s >> 1;
        return kPi * P + 0.5 * kPi + (2 * ap - 1) * q_half + (2 * at - 1) * eps;
    }
    double mid(int s, int at) const
    {
        const int ap = s & 1, P = s >> 1;
        return kPi * P + 0.75 * kPi + (2 * ap - 1) * q_one + (2 * at - 1) * q_zero;
    }
    static int next(int s, int at) { return at | ((((s >> 1) ^ (s & 1)) & 1) << 1); }
};

inline const GmskTrellisModel& trellis_model()
{
    static const GmskTrellisModel m;
    return m;
}

// Rotation by +pi/4 per half-symbol sample (sign = -1 undoes it), n = 0 at a symbol boundary.
inline std::vector<cf64> phase_rotate(std::span<const cf64> x, int n0 = 0, int sign = 1)
{
    std::array<cf64, 8> rot{};
    for (int i = 0; i < 8; ++i) rot[i] = std::polar(1.0, sign * kPi * i / 4);
    std::vector<cf64> y(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) y[n] = x[n] * rot[static_cast<std::size_t>(((n0 + static_cast<long>(n)) % 8 + 8) % 8)];
    return y;
}

// Channel phase tracker. Angles in radians, time in symbols.
// p: phase at the last boundary, f: frequency term, dr: Doppler rate term, ds: accumulated Doppler shift
struct TrackingLoopState {
    double p = 0, f = 0, dr = 0, ds = 0;
};

struct LoopGains {
    double ua = 0.12, ub = 0.008, uc = 0.0002;
};

// phase predicted for the boundary (k) and mid (k + 1/2) samples of the next symbol
inline std::pair<double, double> loop_predict(const TrackingLoopState& L)
{
    const double ds = L.ds + L.dr;
    const double pb = L.p + ds + L.f;
    const double pm = pb + 0.5 * (L.f + ds + 0.75 * L.dr);
    return {pb, pm};
}

inline TrackingLoopState loop_update(TrackingLoopState L, double perr, const LoopGains& g)
{
    L.dr += g.uc * perr;
    L.ds += L.dr;
    L.f += g.ub * perr;
    L.p += L.ds + L.f + g.ua * perr;
    return L;
}

// Loop state at boundary k0 - 1 for a channel with phase theta and frequency w (rad/symbol) at t_ref,
// and Doppler rate dr (rad/symbol^2).
inline TrackingLoopState loop_init(double theta, double w, double dr, double t_ref, int k0)
{
    TrackingLoopState L;
    const double d = (k0 - 1) - t_ref;
    L.p = theta + w * d + 0.5 * dr * d * d;
    L.f = w;
    L.dr = dr;
    L.ds = dr * (d - 0.5);
    return L;
}

struct SovaConfig {
    int depth = 32;
    double clip = 40.0;
    LoopGains gains{};
    bool track = true;
};

struct SovaResult {
    Bits hard;          // symbols k0..k1-1 as bits
    Soft soft;          // signed reliabilities, > 0 means 1
    double metric = -std::numeric_limits<double>::infinity();
    int final_state = 0;
    TrackingLoopState final_loop{};
};

// 4-state soft-output Viterbi over rotated samples x (x[2k] boundary, x[2k+1] mid) for symbols
// [k0, k1). `known[k]` is -1 for free symbols, else the forced bit. `init_metric` gives the start
// states (-inf to exclude); `end_mask` bit s allows final state s.
inline SovaResult sova4(std::span<const cf64> x, int k0, int k1, std::span<const int> known,
                        const std::array<double, 4>& init_metric, const TrackingLoopState& init_loop,
                        const SovaConfig& cfg = {}, unsigned end_mask = 0xF)
{
    constexpr double NEG = -std::numeric_limits<double>::infinity();
    constexpr double INF = std::numeric_limits<double>::infinity();
    const auto& mdl = trellis_model();
    const int n = k1 - k0;
    SovaResult res;
    if (n <= 0) return res;

    struct Path {
        double metric;
        TrackingLoopState loop;
        std::vector<std::uint8_t> hard;
        std::vector<double> rel;
    };
    std::array<Path, 4> cur, nxt;
    for (int s = 0; s < 4; ++s) {
        cur[s] = {init_metric[s], init_loop, std::vector<std::uint8_t>(n), std::vector<double>(n, INF)};
        nxt[s] = {NEG, init_loop, std::vector<std::uint8_t>(n), std::vector<double>(n, INF)};
    }
    res.hard.assign(n, 0);
    res.soft.assign(n, 0.0);
    auto emit = [&](const Path& p, int j) {
        res.hard[j] = p.hard[j];
        const double r = std::min(p.rel[j], cfg.clip);
        res.soft[j] = p.hard[j] ? r : -r;
    };

    // conj of the model phasors, indexed [state][symbol]
    static const auto mph = [] {
        const auto& m = trellis_model();
        std::array<std::array<cf64, 2>, 8> t{};
        for (int s = 0; s < 4; ++s)
            for (int a = 0; a < 2; ++a) {
                t[s][a] = std::polar(1.0, -m.boundary(s, a));
                t[4 + s][a] = std::polar(1.0, -m.mid(s, a));
            }
        return t;
    }();
    (void)mdl;

    for (int k = k0; k < k1; ++k) {
        const int j = k - k0;
        const cf64 xb = x[2 * static_cast<std::size_t>(k)];
        const cf64 xm = x[2 * static_cast<std::size_t>(k) + 1];
        // derotated samples per source state
        std::array<cf64, 4> rb{}, rm{};
        for (int s = 0; s < 4; ++s) {
            if (cur[s].metric == NEG) continue;
            auto [pb, pm] = cfg.track ? loop_predict(cur[s].loop) : std::pair{cur[s].loop.p, cur[s].loop.p};
            rb[s] = xb * std::polar(1.0, -pb);
            rm[s] = xm * std::polar(1.0, -pm);
        }
        for (int sn = 0; sn < 4; ++sn) {
            const int at = sn & 1;
            Path& out = nxt[sn];
            out.metric = NEG;
            if (known[k] >= 0 && known[k] != at) continue;
            // predecessors (ap, P) with P ^ ap = sn >> 1
            double cand[2];
            cf64 esum[2];
            int ps[2];
            for (int i = 0; i < 2; ++i) {
                const int ap = i, P = ((sn >> 1) ^ ap) & 1;
                const int s = ap | (P << 1);
                ps[i] = s;
                cand[i] = NEG;
                if (cur[s].metric == NEG) continue;
                const cf64 eb = rb[s] * mph[s][at];
                const cf64 em = rm[s] * mph[4 + s][at];
                cand[i] = cur[s].metric + eb.real() + em.real();
                esum[i] = eb + em;
            }
            if (cand[0] == NEG && cand[1] == NEG) continue;
            const int w = cand[1] > cand[0] ? 1 : 0;
            const int l = 1 - w;
            const Path& win = cur[ps[w]];
            out.metric = cand[w];
            out.loop = cfg.track ? loop_update(win.loop, std::arg(esum[w]), cfg.gains) : win.loop;
            std::copy(win.hard.begin(), win.hard.begin() + j, out.hard.begin());
            std::copy(win.rel.begin(), win.rel.begin() + j, out.rel.begin());
            out.hard[j] = static_cast<std::uint8_t>(at);
            out.rel[j] = INF;
            if (cand[l] != NEG) {
                const Path& los = cur[ps[l]];
                const double delta = cand[w] - cand[l];
                for (int q = std::max(0, j - cfg.depth + 1); q < j; ++q)
                    if (win.hard[q] != los.hard[q]) out.rel[q] = std::min(out.rel[q], delta);
            }
        }
        std::swap(cur, nxt);
        // decisions older than the survivor depth are final
        if (j + 1 >= cfg.depth) {
            int best = 0;
            for (int s = 1; s < 4; ++s)
                if (cur[s].metric > cur[best].metric) best = s;
            if (cur[best].metric != NEG) emit(cur[best], j + 1 - cfg.depth);
        }
    }
    int best = -1;
    for (int s = 0; s < 4; ++s)
        if (((end_mask >> s) & 1) && cur[s].metric != NEG && (best < 0 || cur[s].metric > cur[best].metric)) best = s;
    if (best < 0) return res;
    // an open end: the other allowed end states compete with the best one
    for (int s = 0; s < 4; ++s) {
        if (s == best || !((end_mask >> s) & 1) || cur[s].metric == NEG) continue;
        const double delta = cur[best].metric - cur[s].metric;
        for (int q = std::max(0, n - cfg.depth); q < n; ++q)
            if (cur[s].hard[q] != cur[best].hard[q]) cur[best].rel[q] = std::min(cur[best].rel[q], delta);
    }
    res.metric = cur[best].metric;
    res.final_state = best;
    res.final_loop = cur[best].loop;
    for (int j = std::max(0, n - cfg.depth + 1); j < n; ++j) emit(cur[best], j);
    if (n < cfg.depth)
        for (int j = 0; j < n; ++j) emit(cur[best], j);
    return res;
}

// Plain 8-state Viterbi on unrotated samples: state (a_{k-1}, sum of older symbols mod 4 in pi/2 units).
// Used to check that the rotated 4-state trellis selects the same sequence.
inline Bits viterbi8(std::span<const cf64> x, int k0, int k1)
{
    constexpr double NEG = -std::numeric_limits<double>::infinity();
    const auto& mdl = trellis_model();
    const int n = k1 - k0;
    std::array<double, 8> pm{};
    std::array<std::vector<std::uint8_t>, 8> path;
    for (auto& p : path) p.assign(n, 0);
    for (int k = k0; k < k1; ++k) {
        const int j = k - k0;
        std::array<double, 8> npm;
        npm.fill(NEG);
        std::array<std::vector<std::uint8_t>, 8> npath = path;
        std::array<int, 8> from{};
        from.fill(-1);
        for (int s = 0; s < 8; ++s) {
            if (pm[s] == NEG) continue;
            const int ap = s & 1, phi = s >> 1;
            for (int at = 0; at < 2; ++at) {
                const double base = 0.5 * kPi * phi;
                const double mb = base + (2 * ap - 1) * mdl.q_half + (2 * at - 1) * mdl.eps;
                const double mm = base + (2 * ap - 1) * mdl.q_one + (2 * at - 1) * mdl.q_zero;
                const double m = pm[s] + (x[2 * k] * std::polar(1.0, -mb)).real() + (x[2 * k + 1] * std::polar(1.0, -mm)).real();
                const int sn = at | ((((phi + (2 * ap - 1)) % 4 + 4) % 4) << 1);
                if (m > npm[sn]) {
                    npm[sn] = m;
                    from[sn] = s;
                }
            }
        }
        for (int sn = 0; sn < 8; ++sn)
            if (from[sn] >= 0) {
                npath[sn] = path[from[sn]];
                npath[sn][j] = static_cast<std::uint8_t>(sn & 1);
            }
        pm = npm;
        path = std::move(npath);
    }
    int best = 0;
    for (int s = 1; s < 8; ++s)
        if (pm[s] > pm[best]) best = s;
    return path[best];
}

} // namespace lrfhss
