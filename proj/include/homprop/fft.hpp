#pragma once

#include "homprop/linalg.hpp"

#include <fftw3.h>

#include <mutex>

namespace homprop {

namespace detail {
inline std::mutex &fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
} // namespace detail

/// Unnormalized forward/backward complex DFT of a fixed length, backed by
/// FFTW. Plans use FFTW_ESTIMATE so results do not depend on timing.
class Fft {
public:
  explicit Fft(std::size_t n) : n_(n), buffer_(static_cast<Eigen::Index>(n)) {
    auto *data = reinterpret_cast<fftw_complex *>(buffer_.data());
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward_ = fftw_plan_dft_1d(static_cast<int>(n), data, data, FFTW_FORWARD,
                                FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(static_cast<int>(n), data, data,
                                 FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  Fft(const Fft &) = delete;
  Fft &operator=(const Fft &) = delete;
  ~Fft() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  std::size_t size() const { return n_; }

  /// X_m = sum_j x_j e^{-2 pi i j m / n}
  void forward(CVector &v) { run(forward_, v); }
  /// x_j = sum_m X_m e^{+2 pi i j m / n}   (no 1/n)
  void backward(CVector &v) { run(backward_, v); }

private:
  void run(fftw_plan plan, CVector &v) {
    buffer_ = v;
    auto *data = reinterpret_cast<fftw_complex *>(buffer_.data());
    fftw_execute_dft(plan, data, data);
    v = buffer_;
  }

  std::size_t n_;
  CVector buffer_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Signed frequency index of DFT bin m for length n: 0..n/2-1, -n/2..-1.
inline long fft_index(std::size_t m, std::size_t n) {
  return m < n / 2 ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(n);
}

} // namespace homprop
