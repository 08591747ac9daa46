#pragma once

#include "lrfhss/common.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lrfhss {

// File layout: a 128-byte ASCII header, space padded, last byte '\n'
//   LRFHSS-IQ 1
//   sample_rate <%.17g>
//   t0 <%.17g>
//   samples <count>
// followed by count little-endian float32 pairs I, Q.
inline constexpr std::size_t kIqHeaderSize = 128;

inline std::string iq_header_text(const IqBuffer& iq)
{
    char buf[kIqHeaderSize + 1];
    const int n = std::snprintf(buf, sizeof buf, "LRFHSS-IQ 1\nsample_rate %.17g\nt0 %.17g\nsamples %zu\n", iq.sample_rate,
                                iq.t0, iq.size());
    if (n < 0 || static_cast<std::size_t>(n) >= kIqHeaderSize) throw Error("iq-header", "header does not fit");
    std::string h(buf, static_cast<std::size_t>(n));
    h.resize(kIqHeaderSize - 1, ' ');
    h.push_back('\n');
    return h;
}

namespace detail {
inline std::uint32_t to_le(std::uint32_t v)
{
    if constexpr (std::endian::native == std::endian::big)
        return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
    return v;
}
} // namespace detail

inline std::string iq_encode(const IqBuffer& iq)
{
    std::string out = iq_header_text(iq);
    out.reserve(kIqHeaderSize + 8 * iq.size());
    for (const auto& s : iq.samples)
        for (float f : {static_cast<float>(s.real()), static_cast<float>(s.imag())}) {
            const std::uint32_t u = detail::to_le(std::bit_cast<std::uint32_t>(f));
            char b[4];
            std::memcpy(b, &u, 4);
            out.append(b, 4);
        }
    return out;
}

inline IqBuffer iq_decode(const std::string& bytes, const std::string& name = "<memory>")
{
    if (bytes.size() < kIqHeaderSize) throw Error("iq-header", name + ": shorter than the header");
    std::istringstream h(bytes.substr(0, kIqHeaderSize));
    std::string magic, ver, k1, k2, k3;
    IqBuffer iq;
    std::size_t n = 0;
    if (!(h >> magic >> ver >> k1 >> iq.sample_rate >> k2 >> iq.t0 >> k3 >> n) || magic != "LRFHSS-IQ" || ver != "1" ||
        k1 != "sample_rate" || k2 != "t0" || k3 != "samples")
        throw Error("iq-header", name + ": malformed header");
    std::string rest;
    h >> std::ws;
    std::getline(h, rest, '\0');
    if (rest.find_first_not_of(" \n") != std::string::npos || bytes[kIqHeaderSize - 1] != '\n')
        throw Error("iq-header", name + ": malformed header padding");
    if (!(iq.sample_rate > 0) || !std::isfinite(iq.t0)) throw Error("iq-header", name + ": bad sample rate or t0");
    const std::size_t body = bytes.size() - kIqHeaderSize;
    if (body != 8 * n)
        throw Error("iq-truncated", name + ": header declares " + std::to_string(n) + " samples, body holds " +
                                        std::to_string(body) + " bytes");
    iq.samples.resize(n);
    const char* p = bytes.data() + kIqHeaderSize;
    for (std::size_t i = 0; i < n; ++i) {
        float f[2];
        for (int c = 0; c < 2; ++c) {
            std::uint32_t u;
            std::memcpy(&u, p, 4);
            p += 4;
            f[c] = std::bit_cast<float>(detail::to_le(u));
        }
        iq.samples[i] = {f[0], f[1]};
    }
    return iq;
}

inline void write_iq(const std::string& path, const IqBuffer& iq)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("io", path + ": cannot open for writing");
    const auto b = iq_encode(iq);
    f.write(b.data(), static_cast<std::streamsize>(b.size()));
    if (!f) throw Error("io", path + ": write failed");
}

inline IqBuffer read_iq(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("io", path + ": cannot open");
    std::ostringstream ss;
    ss << f.rdbuf();
    return iq_decode(ss.str(), path);
}

} // namespace lrfhss
