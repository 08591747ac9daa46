#pragma once

#include "lrfhss/channel.hpp"
#include "lrfhss/modem.hpp"

#include <random>

namespace testsig {

using namespace lrfhss;

inline constexpr int kOsr = 128;
inline constexpr int kHop = 64;

struct Placed {
    IqBuffer iq;
    Packet pkt;
    HopPlan plan;
    std::vector<BlockSpan> layout;   // sample offsets already include the lead
};

inline std::vector<std::uint8_t> random_payload(std::uint64_t seed, int n)
{
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> p(n);
    for (auto& v : p) v = static_cast<std::uint8_t>(rng());
    return p;
}

// packet preceded by `lead` lane samples of silence and followed by `tail`; carrier on the absolute clock
inline Placed place_packet(const PacketConfig& cfg, std::span<const std::uint8_t> payload, long lead, long tail = 200,
                           std::vector<int> channels = {})
{
    Placed out;
    out.pkt = build_packet(cfg, payload);
    const int nb = static_cast<int>(out.pkt.blocks.size());
    out.plan = channels.empty() ? hop_plan_for(cfg, cfg.hop_seed, nb) : HopPlan{};
    if (!channels.empty()) {
        out.plan.channel_indices = channels;
        out.plan.n_channels = cfg.n_channels;
        out.plan.channel_spacing_hz = cfg.channel_spacing_hz();
    }
    GmskParams gp;
    gp.osr = kOsr;
    auto sig = synthesize_packet(out.pkt.blocks, out.plan, gp, cfg.ocw_hz);
    out.iq.sample_rate = sig.sample_rate;
    const long off = lead * kHop;
    out.iq.samples.assign(static_cast<std::size_t>(off + tail * kHop) + sig.size(), cf64{});
    out.layout = block_layout(out.pkt.blocks, out.plan, kOsr);
    for (std::size_t i = 0; i < out.layout.size(); ++i) {
        auto& b = out.layout[i];
        const double w = kTwoPi * b.freq_hz / sig.sample_rate;
        const auto rot = std::polar(1.0, w * double(off));
        for (std::size_t n = b.start; n < b.start + b.length; ++n) out.iq.samples[off + n] = sig.samples[n] * rot;
        b.start += off;
    }
    return out;
}

inline PacketConfig default_config(std::uint32_t hop_seed = 77, CodingRate r = CodingRate::R1_3, int L = 32)
{
    PacketConfig c;
    c.coding_rate = r;
    c.payload_len = L;
    c.n_headers = default_header_count(r);
    c.hop_seed = hop_seed;
    return c;
}

} // namespace testsig
