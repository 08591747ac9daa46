#pragma once

#include "lrfhss/frame.hpp"
#include "lrfhss/parallel.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

namespace lrfhss {

enum class AlohaMode { Unslotted, Slotted };

inline const char* to_string(AlohaMode m) { return m == AlohaMode::Slotted ? "slotted" : "unslotted"; }

inline AlohaMode parse_aloha_mode(const std::string& s)
{
    if (s == "slotted") return AlohaMode::Slotted;
    if (s == "unslotted") return AlohaMode::Unslotted;
    throw Error("bad-mode", "aloha mode must be slotted or unslotted, got '" + s + "'");
}

struct AlohaScenario {
    AlohaMode mode = AlohaMode::Unslotted;
    int n_devices = 1500;
    double connection_time = 1200.0;   // s
    int packet_len = 20;               // bytes
    double beacon_interval = 120.0;    // s, slots restart at every beacon
    int n_channels = 1;
    double offered_load = 1.0;         // packets per packet time, all channels together
    CodingRate coding_rate = CodingRate::R1_3;
    int n_headers = 0;                 // 0: default for the rate
    long min_packets = 100000;         // per load point, whole connection windows are added until reached
    std::uint64_t rng_seed = 1;

    int headers() const { return n_headers > 0 ? n_headers : default_header_count(coding_rate); }
    int fragments() const { return fragment_count(packet_len, coding_rate); }
    double packet_time() const { return time_on_air(headers(), fragments()); }

    void validate() const
    {
        if (n_devices < 1 || connection_time <= 0 || packet_len < 1 || n_channels < 1 || offered_load < 0 ||
            min_packets < 1 || n_headers < 0 || n_headers > 4)
            throw Error("bad-scenario", "aloha scenario value out of range");
        if (beacon_interval < packet_time()) throw Error("bad-scenario", "beacon interval shorter than a packet");
        if (connection_time < 2 * packet_time()) throw Error("bad-scenario", "connection time shorter than two packets");
    }
};

// largest fraction of collided payload fragments the code still recovers
inline double collided_fragment_tolerance(CodingRate r)
{
    switch (r) {
    case CodingRate::R1_3: return 0.40;
    case CodingRate::R1_2: return 0.25;
    case CodingRate::R2_3: return 0.12;
    case CodingRate::R5_6: return 0.04;
    }
    return 0.0;
}

struct AlohaPoint {
    double offered_load = 0.0;
    long packets = 0;
    int windows = 0;
    // packet rule: any overlap on the channel destroys the packet; S in packets per packet time
    double s_packet = 0.0, ci_packet = 0.0;
    // block rule: one clean header and few enough collided fragments; S in payload airtime
    double s_block = 0.0, ci_block = 0.0;
    double payload_fraction = 0.0;
};

struct AlohaWindow {
    long packets = 0;
    long ok_packet = 0;
    long ok_block = 0;
    double span = 0.0;   // usable time, s
};

// one connection window
inline AlohaWindow simulate_aloha_window(const AlohaScenario& sc, std::uint64_t seed)
{
    const double T = sc.packet_time();
    const int nh = sc.headers(), nf = sc.fragments();
    const int max_hit = static_cast<int>(std::floor(collided_fragment_tolerance(sc.coding_rate) * nf + 1e-9));
    std::vector<double> bo, bl;   // block offsets and lengths, s
    double o = 0;
    for (int i = 0; i < nh + nf; ++i) {
        const double l = (i < nh ? kHeaderSymbols : kFragmentSymbols) * kSymbolPeriod;
        bo.push_back(o);
        bl.push_back(l);
        o += l;
    }

    boost::random::mt19937_64 rng(seed);
    AlohaWindow w;
    const long slots_per_beacon = static_cast<long>(std::floor(sc.beacon_interval / T));
    const long beacons = static_cast<long>(std::floor(sc.connection_time / sc.beacon_interval));
    if (sc.mode == AlohaMode::Slotted)
        w.span = double(beacons * slots_per_beacon) * T;
    else
        w.span = sc.connection_time - T;
    const double per_device = sc.offered_load * w.span / T / sc.n_devices;

    std::vector<std::vector<double>> starts(sc.n_channels);
    boost::random::uniform_real_distribution<double> ut(0.0, sc.mode == AlohaMode::Slotted ? 1.0 : w.span);
    boost::random::uniform_int_distribution<long> us(0, std::max(0L, beacons * slots_per_beacon - 1));
    boost::random::uniform_int_distribution<int> uc(0, sc.n_channels - 1);
    if (per_device > 0) {
        boost::random::poisson_distribution<long, double> pd(per_device);
        for (int d = 0; d < sc.n_devices; ++d) {
            const long n = pd(rng);
            for (long k = 0; k < n; ++k) {
                double t;
                if (sc.mode == AlohaMode::Slotted) {
                    const long s = us(rng);
                    t = double(s / slots_per_beacon) * sc.beacon_interval + double(s % slots_per_beacon) * T;
                } else {
                    t = ut(rng);
                }
                starts[uc(rng)].push_back(t);
            }
        }
    }

    for (auto& st : starts) {
        std::sort(st.begin(), st.end());
        const std::size_t n = st.size();
        w.packets += static_cast<long>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double ti = st[i];
            std::size_t lo = i, hi = i + 1;
            // adjacent slots touch; rounding must not turn that into an overlap
            while (lo > 0 && st[lo - 1] > ti - T + 1e-9) --lo;
            while (hi < n && st[hi] < ti + T - 1e-9) ++hi;
            if (hi - lo == 1) {
                ++w.ok_packet;
                ++w.ok_block;
                continue;
            }
            // another packet covers [tj, tj + T) without gaps
            bool header_ok = false;
            int hit = 0;
            for (int b = 0; b < nh + nf; ++b) {
                const double b0 = ti + bo[b], b1 = b0 + bl[b];
                bool c = false;
                for (std::size_t j = lo; j < hi && !c; ++j)
                    if (j != i && st[j] < b1 - 1e-9 && st[j] + T > b0 + 1e-9) c = true;
                if (b < nh)
                    header_ok |= !c;
                else
                    hit += c;
            }
            w.ok_block += header_ok && hit <= max_hit;
        }
    }
    return w;
}

namespace detail {
inline void mean_ci(const std::vector<double>& v, double& m, double& ci)
{
    const double n = double(v.size());
    m = 0;
    for (double x : v) m += x;
    m /= n;
    double s2 = 0;
    for (double x : v) s2 += (x - m) * (x - m);
    ci = v.size() > 1 ? 1.96 * std::sqrt(s2 / (n - 1) / n) : 0.0;
}
} // namespace detail

// S(G) for each offered load; windows are seeded by (seed, load, window) so the worker count does not matter
inline std::vector<AlohaPoint> simulate_throughput(const AlohaScenario& sc, const std::vector<double>& loads, int workers = 0)
{
    sc.validate();
    const double T = sc.packet_time();
    const double pf = sc.fragments() * kFragmentSymbols * kSymbolPeriod / T;
    struct Job {
        std::size_t point;
        int window;
    };
    std::vector<Job> jobs;
    std::vector<int> nwin(loads.size());
    for (std::size_t p = 0; p < loads.size(); ++p) {
        const double span = sc.mode == AlohaMode::Slotted
                                ? std::floor(sc.connection_time / sc.beacon_interval) * std::floor(sc.beacon_interval / T) * T
                                : sc.connection_time - T;
        const double per_window = std::max(1.0, loads[p] * span / T);
        nwin[p] = std::max(2, static_cast<int>(std::ceil(double(sc.min_packets) / per_window)));
        for (int w = 0; w < nwin[p]; ++w) jobs.push_back({p, w});
    }
    std::vector<AlohaWindow> res(jobs.size());
    parallel_for(
        jobs.size(),
        [&](std::size_t i) {
            AlohaScenario s = sc;
            s.offered_load = loads[jobs[i].point];
            res[i] = simulate_aloha_window(s, derive_seed(sc.rng_seed, std::bit_cast<std::uint64_t>(s.offered_load),
                                                          static_cast<std::uint64_t>(jobs[i].window)));
        },
        workers);

    std::vector<AlohaPoint> out(loads.size());
    std::vector<std::vector<double>> sp(loads.size()), sb(loads.size());
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& w = res[i];
        auto& pt = out[jobs[i].point];
        pt.packets += w.packets;
        ++pt.windows;
        sp[jobs[i].point].push_back(double(w.ok_packet) * T / w.span);
        sb[jobs[i].point].push_back(double(w.ok_block) * T / w.span * pf);
    }
    for (std::size_t p = 0; p < loads.size(); ++p) {
        out[p].offered_load = loads[p];
        out[p].payload_fraction = pf;
        detail::mean_ci(sp[p], out[p].s_packet, out[p].ci_packet);
        detail::mean_ci(sb[p], out[p].s_block, out[p].ci_block);
    }
    return out;
}

struct ChannelCurve {
    int n_channels = 1;
    std::vector<AlohaPoint> points;
};

inline std::vector<ChannelCurve> simulate_multichannel(const AlohaScenario& sc, const std::vector<int>& channel_counts,
                                                       const std::vector<double>& loads, int workers = 0)
{
    std::vector<ChannelCurve> out;
    for (int c : channel_counts) {
        AlohaScenario s = sc;
        s.n_channels = c;
        out.push_back({c, simulate_throughput(s, loads, workers)});
    }
    return out;
}

// classical curves, all channels together, equal split of the load
inline double aloha_theory(AlohaMode m, double G, int channels = 1)
{
    const double g = G / channels;
    return channels * g * std::exp((m == AlohaMode::Slotted ? -1.0 : -2.0) * g);
}

inline std::vector<double> load_grid(double lo, double hi, double step)
{
    std::vector<double> g;
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int i = 0; i <= n; ++i) g.push_back(lo + i * step);
    return g;
}

} // namespace lrfhss
