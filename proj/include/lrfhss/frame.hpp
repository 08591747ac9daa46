#pragma once

#include "lrfhss/common.hpp"
#include "lrfhss/convolutional.hpp"
#include "lrfhss/crc.hpp"
#include "lrfhss/interleaver.hpp"

#include <optional>
#include <span>

namespace lrfhss {

struct PacketConfig {
    CodingRate coding_rate = CodingRate::R1_3;
    int n_headers = 3;            // N_H, 1..4
    int payload_len = 32;         // L, maximum payload bytes
    double ocw_hz = 39062.5;      // 80 channels x 488.28125 Hz
    double grid_hz = 3906.25;     // 8 channels
    int n_channels = 80;          // N_CF
    int n_channels_per_ed = 10;   // N_CF/ED
    std::uint32_t hop_seed = 0;   // 12 bits are carried in the header
    Crc16Params crc16{};

    double channel_spacing_hz() const { return ocw_hz / n_channels; }
    int grid_channels() const { return static_cast<int>(std::lround(grid_hz / channel_spacing_hz())); }

    void validate() const
    {
        if (n_headers < 1 || n_headers > 4) throw Error("bad-config", "n_headers must be 1..4");
        if (payload_len < 1 || payload_len > 255) throw Error("bad-config", "payload_len must be 1..255");
        if (n_channels < 1 || n_channels_per_ed < 1 || n_channels_per_ed > n_channels)
            throw Error("bad-config", "n_channels_per_ed must be within 1..n_channels");
        if (grid_channels() < 1 || grid_channels() * n_channels_per_ed > n_channels)
            throw Error("bad-config", "grid does not fit the ED channel subset into the OCW");
    }
};

inline int default_header_count(CodingRate r)
{
    return (r == CodingRate::R1_3 || r == CodingRate::R1_2) ? 3 : 2;
}

// Fields carried by each header replica. Layout (MSB first):
// payload_len:8 coding_rate:2 n_headers-1:2 header_index:2 hop_seed:12 | crc8:8 | tail:6
struct HeaderInfo {
    int payload_len = 0;
    CodingRate coding_rate = CodingRate::R1_3;
    int n_headers = 1;
    int header_index = 0;
    std::uint32_t hop_seed = 0;

    bool operator==(const HeaderInfo&) const = default;
};

inline constexpr int kHeaderInfoBits = 26;
inline constexpr int kHeaderBits = 40;

inline int payload_data_bits(int payload_len) { return 8 * (payload_len + 2); }

inline int payload_coded_bits(int payload_len, CodingRate r)
{
    int data = payload_data_bits(payload_len);
    return coded_length(data + tail_bits_for(data, r), r);
}

inline int fragment_count(int payload_len, CodingRate r)
{
    return static_cast<int>(payload_blocks(payload_coded_bits(payload_len, r)));
}

inline double time_on_air(int n_headers, int n_fragments)
{
    return (n_headers * kHeaderSymbols + n_fragments * kFragmentSymbols) * kSymbolPeriod;
}

inline double time_on_air(const PacketConfig& cfg)
{
    return time_on_air(cfg.n_headers, fragment_count(cfg.payload_len, cfg.coding_rate));
}

namespace detail {
inline void put_bits(Bits& out, std::uint32_t v, int n)
{
    for (int i = n - 1; i >= 0; --i) out.push_back((v >> i) & 1u);
}
inline std::uint32_t get_bits(std::span<const std::uint8_t> b, int& pos, int n)
{
    std::uint32_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | (b[pos++] & 1u);
    return v;
}
} // namespace detail

// 40 bits: info, crc8 over info, 6 zero tail bits
inline Bits serialize_header(const HeaderInfo& h)
{
    if (h.payload_len < 0 || h.payload_len > 255 || h.n_headers < 1 || h.n_headers > 4 || h.header_index < 0 ||
        h.header_index >= h.n_headers)
        throw Error("bad-header", "header fields out of range");
    Bits b;
    detail::put_bits(b, static_cast<std::uint32_t>(h.payload_len), 8);
    detail::put_bits(b, static_cast<std::uint32_t>(h.coding_rate), 2);
    detail::put_bits(b, static_cast<std::uint32_t>(h.n_headers - 1), 2);
    detail::put_bits(b, static_cast<std::uint32_t>(h.header_index), 2);
    detail::put_bits(b, h.hop_seed & 0xFFFu, 12);
    detail::put_bits(b, crc8_bits(b), 8);
    b.resize(kHeaderBits, 0);
    return b;
}

struct HeaderParse {
    HeaderInfo info;
    bool crc_ok = false;
};

inline HeaderParse parse_header_bits(std::span<const std::uint8_t> bits40)
{
    if (bits40.size() < kHeaderInfoBits + 8) throw Error("length-mismatch", "header needs 34 bits");
    HeaderParse p;
    p.crc_ok = crc8_check(bits40.first(kHeaderInfoBits), bits40.subspan(kHeaderInfoBits, 8));
    int pos = 0;
    p.info.payload_len = static_cast<int>(detail::get_bits(bits40, pos, 8));
    p.info.coding_rate = static_cast<CodingRate>(detail::get_bits(bits40, pos, 2));
    p.info.n_headers = static_cast<int>(detail::get_bits(bits40, pos, 2)) + 1;
    p.info.header_index = static_cast<int>(detail::get_bits(bits40, pos, 2));
    p.info.hop_seed = detail::get_bits(bits40, pos, 12);
    if (p.info.header_index >= p.info.n_headers || p.info.payload_len == 0) p.crc_ok = false;
    return p;
}

// 80 coded header bits (rate 1/2), before interleaving
inline Bits encode_header(const HeaderInfo& h)
{
    return puncture(conv_encode(serialize_header(h)), CodingRate::R1_2);
}

// payload bytes + CRC16 (big-endian) as bits, MSB first
inline Bits payload_info_bits(std::span<const std::uint8_t> payload, Crc16Params crc = {})
{
    Bits b;
    b.reserve(8 * (payload.size() + 2));
    for (auto byte : payload) detail::put_bits(b, byte, 8);
    detail::put_bits(b, crc16(payload, crc), 16);
    return b;
}

// coded + punctured payload stream, before interleaving
inline Bits encode_payload(std::span<const std::uint8_t> payload, CodingRate r, Crc16Params crc = {})
{
    Bits b = payload_info_bits(payload, crc);
    b.resize(b.size() + tail_bits_for(static_cast<int>(b.size()), r), 0);
    return puncture(conv_encode(b), r);
}

enum class BlockRole { Header, Payload };

// One hopping block as channel bits (one bit per GMSK symbol)
struct BitBlock {
    BlockRole role = BlockRole::Payload;
    int index = 0;  // header replica index or payload fragment index
    Bits bits;
};

inline Bits header_block_bits(std::span<const std::uint8_t> interleaved80)
{
    Bits out(interleaved80.begin(), interleaved80.begin() + 40);
    Bits sync = syncword_bits();
    out.insert(out.end(), sync.begin(), sync.end());
    out.insert(out.end(), interleaved80.begin() + 40, interleaved80.end());
    out.push_back(0);
    out.push_back(0);
    return out;
}

// positions of the 80 coded bits inside a 114-symbol header block
inline int header_coded_position(int j) { return j < 40 ? j : j + kSyncSymbols; }

struct Packet {
    HeaderInfo info;
    std::vector<BitBlock> blocks;   // N_H headers followed by N_F fragments
    int n_headers = 0;
    int n_fragments = 0;
};

inline Packet build_packet(const PacketConfig& cfg, std::span<const std::uint8_t> payload)
{
    cfg.validate();
    if (payload.empty()) throw Error("empty-payload", "payload must hold at least one byte");
    if (static_cast<int>(payload.size()) > cfg.payload_len)
        throw Error("payload-too-long", std::to_string(payload.size()) + " > " + std::to_string(cfg.payload_len));

    Packet p;
    p.n_headers = cfg.n_headers;
    p.info = {static_cast<int>(payload.size()), cfg.coding_rate, cfg.n_headers, 0, cfg.hop_seed & 0xFFFu};

    for (int i = 0; i < cfg.n_headers; ++i) {
        HeaderInfo h = p.info;
        h.header_index = i;
        Bits coded = encode_header(h);
        Bits il = interleave_header<std::uint8_t>(coded);
        p.blocks.push_back({BlockRole::Header, i, header_block_bits(il)});
    }

    Bits coded = encode_payload(payload, cfg.coding_rate, cfg.crc16);
    Bits il = interleave_payload<std::uint8_t>(coded);
    p.n_fragments = static_cast<int>(il.size() / kFragmentCodedBits);
    for (int f = 0; f < p.n_fragments; ++f) {
        Bits fb(il.begin() + f * kFragmentCodedBits, il.begin() + (f + 1) * kFragmentCodedBits);
        fb.push_back(0);
        fb.push_back(0);
        p.blocks.push_back({BlockRole::Payload, f, std::move(fb)});
    }
    return p;
}

struct PayloadDecode {
    std::vector<std::uint8_t> bytes;
    bool crc_ok = false;
};

// soft: 48 values per fragment in fragment order (positive favours bit 1)
inline PayloadDecode decode_payload_soft(std::span<const double> soft, int payload_len, CodingRate r, Crc16Params crc = {})
{
    const int coded = payload_coded_bits(payload_len, r);
    const int n_frag = static_cast<int>(payload_blocks(coded));
    if (static_cast<int>(soft.size()) != n_frag * kFragmentCodedBits)
        throw Error("length-mismatch", "payload soft length does not match fragment count");
    Soft de = deinterleave_payload<double>(soft);
    de.resize(coded);
    Soft mother = depuncture(de, r);
    auto vr = viterbi_decode(mother, true, static_cast<std::size_t>(payload_data_bits(payload_len)));

    PayloadDecode out;
    const int nb = payload_len + 2;
    std::vector<std::uint8_t> bytes(nb);
    for (int i = 0; i < nb; ++i) {
        std::uint8_t v = 0;
        for (int k = 0; k < 8; ++k) v = static_cast<std::uint8_t>((v << 1) | vr.bits[8 * i + k]);
        bytes[i] = v;
    }
    out.bytes.assign(bytes.begin(), bytes.begin() + payload_len);
    std::uint16_t rx = static_cast<std::uint16_t>((bytes[payload_len] << 8) | bytes[payload_len + 1]);
    out.crc_ok = crc16(out.bytes, crc) == rx;
    return out;
}

// header: 80 soft values in transmitted (interleaved) order
inline HeaderParse decode_header_soft(std::span<const double> soft80)
{
    Soft de = deinterleave_header<double>(soft80);
    Soft mother = depuncture(de, CodingRate::R1_2);
    auto vr = viterbi_decode(mother, true);
    return parse_header_bits(vr.bits);
}

} // namespace lrfhss
