#pragma once

#include <fftw3.h>

#include <memory>
#include <mutex>

namespace vamct::detail {

// The FFTW planner is not thread-safe; execution with new-array calls is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter>;

inline FftwBuffer<double> fftw_real(std::size_t n) { return FftwBuffer<double>(fftw_alloc_real(n)); }
inline FftwBuffer<fftw_complex> fftw_complex_buf(std::size_t n) {
  return FftwBuffer<fftw_complex>(fftw_alloc_complex(n));
}

}  // namespace vamct::detail
