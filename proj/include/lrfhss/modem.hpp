#pragma once

#include "lrfhss/frame.hpp"
#include "lrfhss/gmsk.hpp"

#include <random>

namespace lrfhss {

struct HopPlan {
    std::vector<int> channel_indices;   // 0..N_CF-1, one per hopping block
    int n_channels = 80;
    double channel_spacing_hz = kSymbolRate;
    std::vector<std::size_t> fragment_boundaries;   // start sample of each block, filled by synthesis

    double channel_freq(int idx) const { return (idx - n_channels / 2) * channel_spacing_hz; }
};

// ED subset: channels offset + j*stride, j = 0..subset_size-1, stride = n_channels / subset_size.
// Successive blocks draw uniformly among the subset channels other than the previous one.
inline HopPlan hop_sequence(std::uint32_t seed, int n_channels, int n_blocks, int subset_size,
                            double channel_spacing_hz = kSymbolRate)
{
    if (subset_size < 1 || subset_size > n_channels) throw Error("bad-config", "subset_size must be 1..n_channels");
    HopPlan plan;
    plan.n_channels = n_channels;
    plan.channel_spacing_hz = channel_spacing_hz;
    const int stride = n_channels / subset_size;
    std::mt19937_64 rng(derive_seed(seed, 0x686F70));
    const int offset = static_cast<int>(rng() % stride);
    int j = static_cast<int>(rng() % subset_size);
    for (int b = 0; b < n_blocks; ++b) {
        if (b > 0 && subset_size > 1) j = (j + 1 + static_cast<int>(rng() % (subset_size - 1))) % subset_size;
        plan.channel_indices.push_back(offset + j * stride);
    }
    return plan;
}

inline HopPlan hop_plan_for(const PacketConfig& cfg, std::uint32_t hop_seed, int n_blocks)
{
    return hop_sequence(hop_seed & 0xFFFu, cfg.n_channels, n_blocks, cfg.n_channels_per_ed, cfg.channel_spacing_hz());
}

// Time/frequency footprint of one block in a synthesized buffer
struct BlockSpan {
    BlockRole role = BlockRole::Payload;
    int index = 0;
    std::size_t start = 0;   // first sample
    std::size_t length = 0;  // samples
    int channel = 0;
    double freq_hz = 0.0;
};

inline std::vector<BlockSpan> block_layout(const std::vector<BitBlock>& blocks, const HopPlan& plan, int osr)
{
    if (plan.channel_indices.size() != blocks.size())
        throw Error("plan-mismatch", "hop plan has " + std::to_string(plan.channel_indices.size()) + " entries for " +
                                         std::to_string(blocks.size()) + " blocks");
    std::vector<BlockSpan> out;
    std::size_t t = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        BlockSpan s;
        s.role = blocks[i].role;
        s.index = blocks[i].index;
        s.start = t;
        s.length = blocks[i].bits.size() * osr;
        s.channel = plan.channel_indices[i];
        s.freq_hz = plan.channel_freq(s.channel);
        t += s.length;
        out.push_back(s);
    }
    return out;
}

// Each block is modulated on its own (phase restarts per block) and shifted to its channel;
// the carrier follows the continuous sample clock of the whole buffer.
inline IqBuffer synthesize_packet(const std::vector<BitBlock>& blocks, HopPlan& plan, const GmskParams& p, double ocw_hz)
{
    const double fs = p.osr * p.symbol_rate;
    if (fs < ocw_hz) throw Error("bad-config", "sample rate below the operating channel width");
    auto layout = block_layout(blocks, plan, p.osr);
    IqBuffer out;
    out.sample_rate = fs;
    out.samples.resize(layout.empty() ? 0 : layout.back().start + layout.back().length);
    plan.fragment_boundaries.clear();
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& s = layout[i];
        plan.fragment_boundaries.push_back(s.start);
        auto ph = phase_trajectory(bits_to_symbols(blocks[i].bits), p);
        const double w = kTwoPi * s.freq_hz / fs;
        for (std::size_t n = 0; n < ph.size(); ++n) {
            const double carrier = std::fmod(w * double(s.start + n), kTwoPi);
            out.samples[s.start + n] = std::polar(1.0, ph[n] + carrier);
        }
    }
    return out;
}

} // namespace lrfhss
