#pragma once

#include "lrfhss/common.hpp"

#include <span>

namespace lrfhss {

inline double sinc(double x)
{
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

inline double kaiser(double x, double half_width, double beta)
{
    double r = x / half_width;
    if (std::abs(r) > 1.0) return 0.0;
    return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / std::cyl_bessel_i(0.0, beta);
}

// Hann-windowed sinc lowpass, cutoff in cycles/sample, unit DC gain
inline std::vector<double> lowpass_hann(int taps, double cutoff)
{
    std::vector<double> h(taps);
    const double c = 0.5 * (taps - 1);
    double sum = 0;
    for (int n = 0; n < taps; ++n) {
        double w = 0.5 - 0.5 * std::cos(kTwoPi * (n + 0.5) / taps);
        h[n] = 2 * cutoff * sinc(2 * cutoff * (n - c)) * w;
        sum += h[n];
    }
    for (auto& v : h) v /= sum;
    return h;
}

// zero-phase FIR: output[n] = sum_k h[k] x[n + c - k], c = (taps-1)/2, odd taps only
inline std::vector<cf64> filter_same(std::span<const cf64> x, std::span<const double> h)
{
    const int taps = static_cast<int>(h.size());
    const int c = (taps - 1) / 2;
    const int n = static_cast<int>(x.size());
    std::vector<cf64> y(n);
    for (int i = 0; i < n; ++i) {
        cf64 acc{};
        int k0 = std::max(0, i + c - (n - 1)), k1 = std::min(taps - 1, i + c);
        for (int k = k0; k <= k1; ++k) acc += h[k] * x[i + c - k];
        y[i] = acc;
    }
    return y;
}

// Fractional-delay interpolation from a polyphase table of Kaiser-windowed sincs.
class SincInterpolator {
public:
    explicit SincInterpolator(int taps = 16, int phases = 1024, double cutoff = 0.45, double beta = 7.0)
        : taps_(taps), phases_(phases), table_(static_cast<std::size_t>(phases + 1) * taps)
    {
        for (int p = 0; p <= phases; ++p) {
            const double mu = double(p) / phases;
            double* h = &table_[static_cast<std::size_t>(p) * taps];
            double sum = 0;
            for (int t = 0; t < taps; ++t) {
                const double x = t - (taps / 2 - 1) - mu;   // tap t sits at sample i - taps/2 + 1 + t
                h[t] = 2 * cutoff * sinc(2 * cutoff * x) * kaiser(x, 0.5 * taps, beta);
                sum += h[t];
            }
            for (int t = 0; t < taps; ++t) h[t] /= sum;
        }
    }

    int taps() const { return taps_; }

    // value of x at fractional index pos; samples outside the buffer count as zero
    cf64 operator()(std::span<const cf64> x, double pos) const
    {
        double fl = std::floor(pos);
        long i = static_cast<long>(fl);
        int p = static_cast<int>(std::lround((pos - fl) * phases_));
        if (p == phases_) {
            p = 0;
            ++i;
        }
        const double* h = &table_[static_cast<std::size_t>(p) * taps_];
        const long first = i - taps_ / 2 + 1;
        const long n = static_cast<long>(x.size());
        cf64 acc{};
        if (first >= 0 && first + taps_ <= n) {
            const cf64* xs = x.data() + first;
            for (int t = 0; t < taps_; ++t) acc += h[t] * xs[t];
        } else {
            for (int t = 0; t < taps_; ++t) {
                long j = first + t;
                if (j >= 0 && j < n) acc += h[t] * x[j];
            }
        }
        return acc;
    }

private:
    int taps_, phases_;
    std::vector<double> table_;
};

// Cubic Lagrange (Farrow form) fractional-delay interpolation, kept for comparison
inline cf64 cubic_interpolate(std::span<const cf64> x, double pos)
{
    long i = static_cast<long>(std::floor(pos));
    double mu = pos - i;
    auto at = [&](long j) { return (j >= 0 && j < static_cast<long>(x.size())) ? x[j] : cf64{}; };
    cf64 xm1 = at(i - 1), x0 = at(i), x1 = at(i + 1), x2 = at(i + 2);
    cf64 c0 = x0;
    cf64 c1 = -xm1 / 3.0 - x0 / 2.0 + x1 - x2 / 6.0;
    cf64 c2 = xm1 / 2.0 - x0 + x1 / 2.0;
    cf64 c3 = -xm1 / 6.0 + x0 / 2.0 - x1 / 2.0 + x2 / 6.0;
    return ((c3 * mu + c2) * mu + c1) * mu + c0;
}

} // namespace lrfhss
