#pragma once

#include "lrfhss/channel.hpp"
#include "lrfhss/receiver.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace lrfhss {

inline constexpr int kWidebandOsr = 128;

struct TxSignal {
    IqBuffer iq;
    Packet pkt;
    HopPlan plan;
    std::vector<BlockSpan> layout;    // sample offsets include the lead
    std::vector<std::uint8_t> payload;
};

inline std::vector<std::uint8_t> random_bytes(std::uint64_t seed, int n)
{
    boost::random::mt19937_64 rng(seed);
    boost::random::uniform_int_distribution<int> ub(0, 255);
    std::vector<std::uint8_t> p(static_cast<std::size_t>(n));
    for (auto& v : p) v = static_cast<std::uint8_t>(ub(rng));
    return p;
}

// packet between `lead` and `tail` symbols of silence; carriers keep the absolute clock
inline TxSignal transmit(const PacketConfig& cfg, std::span<const std::uint8_t> payload, double lead = 50, double tail = 30,
                         int osr = kWidebandOsr)
{
    TxSignal out;
    out.payload.assign(payload.begin(), payload.end());
    out.pkt = build_packet(cfg, payload);
    out.plan = hop_plan_for(cfg, cfg.hop_seed, static_cast<int>(out.pkt.blocks.size()));
    GmskParams gp;
    gp.osr = osr;
    auto sig = synthesize_packet(out.pkt.blocks, out.plan, gp, cfg.ocw_hz);
    const auto off = static_cast<std::size_t>(std::lround(lead * osr));
    out.iq.sample_rate = sig.sample_rate;
    out.iq.samples.assign(off + static_cast<std::size_t>(std::lround(tail * osr)) + sig.size(), cf64{});
    out.layout = block_layout(out.pkt.blocks, out.plan, osr);
    for (auto& b : out.layout) {
        const auto rot = std::polar(1.0, kTwoPi * b.freq_hz / sig.sample_rate * double(off));
        for (std::size_t n = b.start; n < b.start + b.length; ++n) out.iq.samples[off + n] = sig.samples[n] * rot;
        b.start += off;
    }
    return out;
}

inline bool delivered(const RxResult& r, const std::vector<std::uint8_t>& payload)
{
    for (const auto& p : r.packets)
        if (p.crc_ok && p.payload == payload) return true;
    return false;
}

struct LinkTrial {
    bool delivered = false;
    int headers_ok = 0;
    int detections = 0;
};

// one packet through the channel and the receiver; payload, hop seed and noise come from `seed`
inline LinkTrial simulate_link(PacketConfig pc, ImpairmentProfile prof, std::uint64_t seed, const RxConfig& rx = {})
{
    pc.hop_seed = static_cast<std::uint32_t>(derive_seed(seed, 1) & 0xFFFu);
    const auto payload = random_bytes(derive_seed(seed, 0), pc.payload_len);
    prof.rng_seed = derive_seed(seed, 2);
    auto tx = transmit(pc, payload);
    auto ch = apply_channel(tx.iq, prof, tx.layout);
    RxConfig r = rx;
    r.packet = pc;
    auto res = receive(ch.iq, r);
    LinkTrial t;
    t.delivered = delivered(res, payload);
    t.headers_ok = res.stats.headers_ok;
    t.detections = res.stats.detections;
    return t;
}

// header timing error in symbols from the sync stage alone, detection placed at the true first header
inline std::optional<double> header_timing_error(PacketConfig pc, ImpairmentProfile prof, std::uint64_t seed,
                                                 const HeaderRxConfig& hc = {})
{
    constexpr double lead = 150;   // symbols
    pc.hop_seed = static_cast<std::uint32_t>(derive_seed(seed, 1) & 0xFFFu);
    const auto payload = random_bytes(derive_seed(seed, 0), pc.payload_len);
    prof.rng_seed = derive_seed(seed, 2);
    auto tx = transmit(pc, payload, lead, 0);
    // first header and a few symbols after it
    tx.iq.samples.resize(static_cast<std::size_t>((lead + kHeaderSymbols + 6) * kWidebandOsr));
    auto ch = apply_channel(tx.iq, prof);
    auto store = channelize(ch.iq);
    const long m0 = static_cast<long>(2 * lead);
    DetectionRecord det;
    det.channel = tx.plan.channel_indices[0];
    det.start_sample = m0;
    det.coarse_cfo = coarse_cfo(store, det.channel, m0);
    auto hs = synchronize_header(store, det, hc, estimate_noise_floor(store));
    if (!hs) return std::nullopt;
    // positive STO advances the waveform: the header starts 2 sto lane samples early
    return (hs->start - (double(m0) - 2.0 * prof.initial_sto)) / 2.0;
}

} // namespace lrfhss
