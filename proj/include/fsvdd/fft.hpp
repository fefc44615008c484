#pragma once

#include "fsvdd/types.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <utility>

namespace fsvdd::fft {

namespace detail {

// FFTW planning is not thread-safe, execution on new arrays is. Plans are
// created once per (length, direction) and shared afterwards.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        auto* in = fftw_alloc_complex(static_cast<size_t>(n));
        auto* out = fftw_alloc_complex(static_cast<size_t>(n));
        fftw_plan plan = fftw_plan_dft_1d(n, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(in);
        fftw_free(out);
        plans_.emplace(key, plan);
        return plan;
    }

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline ComplexVector execute(const ComplexVector& input, int sign) {
    const auto n = static_cast<int>(input.size());
    ComplexVector out(n);
    if (n == 0) return out;
    ComplexVector in = input;  // FFTW may scribble over its input
    fftw_plan plan = PlanCache::instance().get(n, sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

}  // namespace detail

/// Unnormalized forward DFT, X_k = sum_t x_t e^{-2 pi i k t / n}.
inline ComplexVector forward(const ComplexVector& x) { return detail::execute(x, FFTW_FORWARD); }

/// Normalized inverse DFT, so that inverse(forward(x)) == x.
inline ComplexVector inverse(const ComplexVector& X) {
    ComplexVector x = detail::execute(X, FFTW_BACKWARD);
    x /= static_cast<double>(X.size());
    return x;
}

}  // namespace fsvdd::fft
