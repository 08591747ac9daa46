#pragma once

#include "lrfhss/gmsk.hpp"

#include <array>

namespace lrfhss {

// Known-symbol phase model of the syncword inside a header block.
// Times are in symbols from the header start; the sync occupies symbols [40, 72).
class SyncReference {
public:
    // 1-based positions {5..15, 18..26} of the syncword used for timing, as 0-based symbol offsets
    static constexpr std::array<int, 20> kTimingSubset{4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 17, 18, 19, 20, 21, 22, 23, 24, 25};

    explicit SyncReference(double bt = 1.0, int span = 3) : q_(bt, span)
    {
        auto b = syncword_bits();
        for (int i = 0; i < kSyncSymbols; ++i) a_[i] = bit_to_symbol(b[i]);
    }

    int symbol(int i) const { return a_[i]; }

    // phase contributed by the sync symbols alone; exact for t in [41, 71]
    double phase(double t) const
    {
        double ph = 0;
        for (int i = 0; i < kSyncSymbols; ++i) ph += a_[i] * q_(t - (kSyncStart + i) - 0.5);
        return ph;
    }

    cf64 waveform(double t) const { return std::polar(1.0, phase(t)); }

    // lane sample range (at `osr` samples/symbol) that depends on sync symbols only
    static int first_clean_sample(int osr) { return (kSyncStart + 1) * osr; }
    static int end_clean_sample(int osr) { return (kSyncEnd - 1) * osr; }

private:
    PhasePulse q_;
    std::array<int, kSyncSymbols> a_{};
};

inline const SyncReference& sync_reference()
{
    static const SyncReference ref;
    return ref;
}

} // namespace lrfhss
