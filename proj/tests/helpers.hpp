#pragma once

#include "ringscatter/common.hpp"
#include "ringscatter/geometry.hpp"
#include "ringscatter/polarization.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

// Shared test utilities: a deterministic RNG (raw mt19937_64 words mapped to
// doubles, so streams are identical across standard libraries) and an
// independent brute-force far-field sum used as the oracle for the library's
// factorized evaluator.
namespace testutil {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Eigen::Vector3d unit_vector() {
    while (true) {
      const double x = uniform(-1, 1), y = uniform(-1, 1), z = uniform(-1, 1);
      const double n2 = x * x + y * y + z * z;
      if (n2 > 1e-4 && n2 <= 1.0) return Eigen::Vector3d(x, y, z) / std::sqrt(n2);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// Direct evaluation of the far-field double sum
//   Omega = (1/N) [ sum_ab (p_b* . p_a) e^{i(k_R-k_L).(r_a-r_b)} e^{-i dphi_ab}
//                   - |sum_a (p_a . R) e^{i(k_R-k_L).r_a} e^{-i hpi_a}|^2 ]
// with plain nested loops; no gauging/factorization shared with the library.
inline double brute_omega(const ringscatter::AtomArray<double>& array,
                          const ringscatter::DipoleField<double>& field, int l, double theta,
                          double phi) {
  using C = std::complex<double>;
  const double tau = 2.0 * std::numbers::pi;
  const int n = array.size();
  const Eigen::Vector3d rhat(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                             std::cos(theta));
  const Eigen::Vector3d k_diff = tau * (rhat - Eigen::Vector3d::UnitZ());

  C sum1(0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      C pdot(0);
      for (int i = 0; i < 3; ++i) pdot += std::conj(field.orientations(b, i)) * field.orientations(a, i);
      const double geom = k_diff.dot(array.positions.row(a) - array.positions.row(b));
      const double hel = tau * l * double(array.azimuth_index(a) - array.azimuth_index(b)) / array.n_phi;
      sum1 += pdot * std::exp(C(0, geom - hel));
    }

  C sum2(0);
  for (int a = 0; a < n; ++a) {
    C d(0);
    for (int i = 0; i < 3; ++i) d += field.orientations(a, i) * rhat[i];
    const double geom = k_diff.dot(array.positions.row(a).transpose().eval());
    const double hel = tau * l * double(array.azimuth_index(a) - 1) / array.n_phi;
    sum2 += d * std::exp(C(0, geom - hel));
  }
  return (sum1.real() - std::norm(sum2)) / n;
}

}  // namespace testutil
