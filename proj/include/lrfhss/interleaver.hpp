#pragma once

#include "lrfhss/common.hpp"

#include <array>
#include <span>

namespace lrfhss {

// Header deinterleaver read order (1-based): deinterleaved[j] = received[order[j] - 1]
inline constexpr std::array<int, kHeaderCodedBits> kHeaderReadOrder{
    1,  18, 26, 34, 42, 50, 58, 66, 73, 2,  10, 27, 35, 43, 51, 59, 67, 74, 3,  11,
    19, 36, 44, 52, 60, 68, 75, 4,  12, 20, 28, 45, 53, 61, 69, 76, 5,  13, 21, 29,
    37, 54, 62, 70, 77, 6,  14, 22, 30, 38, 46, 63, 71, 78, 7,  15, 23, 31, 39, 47,
    55, 72, 79, 8,  16, 24, 32, 40, 48, 56, 64, 80, 9,  17, 25, 33, 41, 49, 57, 65};

template <typename T>
std::vector<T> interleave_header(std::span<const T> coded)
{
    if (coded.size() != kHeaderCodedBits) throw Error("length-mismatch", "header interleaver expects 80 entries");
    std::vector<T> out(kHeaderCodedBits);
    for (int j = 0; j < kHeaderCodedBits; ++j) out[kHeaderReadOrder[j] - 1] = coded[j];
    return out;
}

template <typename T>
std::vector<T> deinterleave_header(std::span<const T> rx)
{
    if (rx.size() != kHeaderCodedBits) throw Error("length-mismatch", "header deinterleaver expects 80 entries");
    std::vector<T> out(kHeaderCodedBits);
    for (int j = 0; j < kHeaderCodedBits; ++j) out[j] = rx[kHeaderReadOrder[j] - 1];
    return out;
}

// Payload interleaver: input is zero padded to n blocks of 48; consecutive inputs are written
// 48 addresses apart, wrapping to the next column after n writes.
inline std::size_t payload_blocks(std::size_t coded_len)
{
    return (coded_len + kFragmentCodedBits - 1) / kFragmentCodedBits;
}

inline std::size_t payload_address(std::size_t i, std::size_t n_blocks)
{
    return (i % n_blocks) * kFragmentCodedBits + i / n_blocks;
}

template <typename T>
std::vector<T> interleave_payload(std::span<const T> coded)
{
    const std::size_t n = payload_blocks(coded.size());
    std::vector<T> out(n * kFragmentCodedBits, T{});
    for (std::size_t i = 0; i < out.size(); ++i)
        out[payload_address(i, n)] = i < coded.size() ? coded[i] : T{};
    return out;
}

// returns all n*48 entries; the caller strips the padding
template <typename T>
std::vector<T> deinterleave_payload(std::span<const T> rx)
{
    if (rx.size() % kFragmentCodedBits) throw Error("length-mismatch", "payload deinterleaver expects whole blocks");
    const std::size_t n = rx.size() / kFragmentCodedBits;
    std::vector<T> out(rx.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rx[payload_address(i, n)];
    return out;
}

} // namespace lrfhss
