#pragma once

#include "lrfhss/common.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

namespace lrfhss {

// Thin FFTW wrapper. Plans are created once per (size, direction) under a lock and
// executed with the new-array interface, so one Fft object can be shared by threads.
class Fft {
public:
    Fft(int n, bool inverse = false) : n_(n)
    {
        std::lock_guard<std::mutex> lk(planner_mutex());
        std::vector<cf64> a(n), b(n);
        plan_ = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(a.data()), reinterpret_cast<fftw_complex*>(b.data()),
                                 inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    ~Fft()
    {
        std::lock_guard<std::mutex> lk(planner_mutex());
        fftw_destroy_plan(plan_);
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    int size() const { return n_; }

    // unnormalised transform, in and out must hold size() values and must not alias
    void execute(const cf64* in, cf64* out) const
    {
        fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(const_cast<cf64*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }

    std::vector<cf64> operator()(std::vector<cf64> x) const
    {
        x.resize(n_);
        std::vector<cf64> y(n_);
        execute(x.data(), y.data());
        return y;
    }

private:
    static std::mutex& planner_mutex()
    {
        static std::mutex m;
        return m;
    }
    int n_;
    fftw_plan plan_;
};

// shared instances by size; the map only grows
inline const Fft& fft_of_size(int n, bool inverse = false)
{
    static std::mutex m;
    static std::map<std::pair<int, bool>, std::unique_ptr<Fft>> cache;
    std::lock_guard<std::mutex> lk(m);
    auto& p = cache[{n, inverse}];
    if (!p) p = std::make_unique<Fft>(n, inverse);
    return *p;
}

} // namespace lrfhss
