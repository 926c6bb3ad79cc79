#pragma once

// Process-wide FFTW plan cache. Plans are created under a mutex (the FFTW
// planner is not thread-safe) and then executed through the new-array
// interface, which is. All plans use FFTW_UNALIGNED so std::vector storage
// can be passed directly.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

namespace opsplit::detail {

class PlanCache {
public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  // dims = 1: shape {n}; dims = 2: shape {n, n} (row = y, column = x)
  fftw_plan r2c(int dims, std::size_t n) { return get(dims, n, true); }
  fftw_plan c2r(int dims, std::size_t n) { return get(dims, n, false); }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int dims, std::size_t n, bool forward) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(dims, n, forward);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const std::size_t real_size = dims == 1 ? n : n * n;
    const std::size_t complex_size = dims == 1 ? n / 2 + 1 : n * (n / 2 + 1);
    std::vector<double> real(real_size);
    std::vector<std::complex<double>> cplx(complex_size);
    auto* c = reinterpret_cast<fftw_complex*>(cplx.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int ni = static_cast<int>(n);

    fftw_plan plan = nullptr;
    if (dims == 1) {
      plan = forward ? fftw_plan_dft_r2c_1d(ni, real.data(), c, flags)
                     : fftw_plan_dft_c2r_1d(ni, c, real.data(), flags | FFTW_DESTROY_INPUT);
    } else {
      plan = forward ? fftw_plan_dft_r2c_2d(ni, ni, real.data(), c, flags)
                     : fftw_plan_dft_c2r_2d(ni, ni, c, real.data(), flags | FFTW_DESTROY_INPUT);
    }
    plans_.emplace(key, plan);
    return plan;
  }

  std::mutex mutex_;
  std::map<std::tuple<int, std::size_t, bool>, fftw_plan> plans_;
};

inline void execute_r2c(int dims, std::size_t n, const double* in, std::complex<double>* out) {
  fftw_plan plan = PlanCache::instance().r2c(dims, n);
  // r2c plans never write to their input
  fftw_execute_dft_r2c(plan, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

// c2r destroys its input; callers pass a scratch copy.
inline void execute_c2r(int dims, std::size_t n, std::complex<double>* in, double* out) {
  fftw_plan plan = PlanCache::instance().c2r(dims, n);
  fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(in), out);
}

}  // namespace opsplit::detail
