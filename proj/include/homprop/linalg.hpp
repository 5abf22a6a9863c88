#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>

namespace homprop {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// e^{i phase}
inline cplx cis(double phase) { return {std::cos(phase), std::sin(phase)}; }

/// Reduce an angle into [-pi, pi).
inline double wrap_angle(double theta) {
  double r = std::fmod(theta + pi, two_pi);
  if (r < 0)
    r += two_pi;
  return r - pi;
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n)
    p <<= 1;
  return p;
}

/// True when every entry is an exact (Gaussian) integer.
inline bool has_integer_entries(const CMatrix &m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const cplx z = m.data()[i];
    if (z.real() != std::round(z.real()) || z.imag() != std::round(z.imag()))
      return false;
  }
  return true;
}

/// Neumaier-compensated sum.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

} // namespace homprop
