#pragma once

#include "lrfhss/payload_rx.hpp"

namespace lrfhss {

struct RxConfig {
    ChannelizerConfig channelizer{};
    DetectorConfig detector{};
    HeaderRxConfig header{};
    PayloadRxConfig payload{};
    PacketConfig packet{};          // network parameters shared by all devices (OCW, channels, CRC)
    int group_tolerance = 4;        // lane samples
};

struct DecodedPacket {
    HeaderInfo info;
    std::vector<std::uint8_t> payload;
    bool crc_ok = false;
    double t_start = 0.0;           // seconds, first header
    int headers_used = 0;
    int fragments_blanked = 0;
    int fragments_erased = 0;
};

struct RxStats {
    int detections = 0;
    int headers_ok = 0;
    int headers_failed = 0;
    int packets_ok = 0;
    int packets_failed = 0;
};

struct RxResult {
    std::vector<DecodedPacket> packets;
    std::vector<HeaderDecodeResult> headers;
    RxStats stats;
};

inline RxResult receive(const BlockStore& store, const RxConfig& cfg = {})
{
    RxResult res;
    auto dets = detect_headers(store, cfg.detector);
    res.stats.detections = static_cast<int>(dets.size());
    const double lane_noise = estimate_noise_floor(store, cfg.detector.noise_floor_rel);
    for (const auto& d : dets) {
        auto h = decode_header(store, d, cfg.header, lane_noise);
        if (h.crc_ok) {
            ++res.stats.headers_ok;
            res.headers.push_back(std::move(h));
        } else {
            ++res.stats.headers_failed;
        }
    }
    // replicas of one packet share the header fields and the packet start
    const int hb = 2 * kHeaderSymbols;
    std::vector<std::vector<HeaderDecodeResult>> groups;
    for (const auto& h : res.headers) {
        const double s0 = h.start - h.info.header_index * hb;
        bool placed = false;
        for (auto& g : groups) {
            const auto& r = g.front();
            HeaderInfo a = r.info, b = h.info;
            a.header_index = b.header_index = 0;
            if (!(a == b) || std::abs(r.start - r.info.header_index * hb - s0) > cfg.group_tolerance) continue;
            bool dup = false;
            for (auto& o : g)
                if (o.info.header_index == h.info.header_index) {
                    dup = true;
                    if (h.best_metric > o.best_metric) o = h;
                }
            if (!dup) g.push_back(h);
            placed = true;
            break;
        }
        if (!placed) groups.push_back({h});
    }
    for (const auto& g : groups) {
        auto ctx = make_payload_context(g, cfg.payload, cfg.packet);
        auto pr = decode_payload(store, ctx, cfg.payload, cfg.packet.crc16);
        DecodedPacket p;
        p.info = ctx.info;
        p.info.header_index = 0;
        p.payload = std::move(pr.bytes);
        p.crc_ok = pr.crc_ok;
        p.t_start = store.time_of(ctx.start);
        p.headers_used = ctx.headers_used;
        p.fragments_blanked = pr.n_blanked;
        p.fragments_erased = pr.n_erased;
        (p.crc_ok ? res.stats.packets_ok : res.stats.packets_failed)++;
        res.packets.push_back(std::move(p));
    }
    std::sort(res.packets.begin(), res.packets.end(), [](const auto& a, const auto& b) { return a.t_start < b.t_start; });
    return res;
}

inline RxResult receive(const IqBuffer& iq, const RxConfig& cfg = {})
{
    return receive(channelize(iq, cfg.channelizer), cfg);
}

} // namespace lrfhss
