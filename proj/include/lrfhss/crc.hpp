#pragma once

#include "lrfhss/common.hpp"

#include <cstdint>
#include <span>

namespace lrfhss {

struct Crc16Params {
    std::uint16_t poly = 0x1021;
    std::uint16_t init = 0xFFFF;
};

// MSB-first over bytes, no reflection, no final xor
inline std::uint16_t crc16(std::span<const std::uint8_t> bytes, Crc16Params p = {})
{
    std::uint16_t reg = p.init;
    for (std::uint8_t byte : bytes) {
        reg ^= static_cast<std::uint16_t>(byte) << 8;
        for (int i = 0; i < 8; ++i)
            reg = (reg & 0x8000) ? static_cast<std::uint16_t>((reg << 1) ^ p.poly)
                                 : static_cast<std::uint16_t>(reg << 1);
    }
    return reg;
}

// bit-serial CRC-8, poly 0x07, init 0; feeding data followed by its CRC leaves 0
inline std::uint8_t crc8_bits(std::span<const std::uint8_t> bits, std::uint8_t init = 0)
{
    std::uint8_t reg = init;
    for (std::uint8_t b : bits) {
        bool fb = ((reg >> 7) & 1u) ^ (b & 1u);
        reg = static_cast<std::uint8_t>(reg << 1);
        if (fb) reg ^= 0x07;
    }
    return reg;
}

inline bool crc8_check(std::span<const std::uint8_t> data_bits, std::span<const std::uint8_t> crc_bits)
{
    std::uint8_t reg = crc8_bits(data_bits);
    for (std::uint8_t b : crc_bits) {
        bool fb = ((reg >> 7) & 1u) ^ (b & 1u);
        reg = static_cast<std::uint8_t>(reg << 1);
        if (fb) reg ^= 0x07;
    }
    return reg == 0;
}

} // namespace lrfhss
