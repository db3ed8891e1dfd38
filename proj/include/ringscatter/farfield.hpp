#pragma once

#include "ringscatter/common.hpp"
#include "ringscatter/geometry.hpp"
#include "ringscatter/polarization.hpp"
#include "ringscatter/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace ringscatter {

// Far-field intensity of the HPI state along R-hat:
//   Omega = (1/N) [ sum_ab G_ab q_a conj(q_b) - |sum_a d_a q_a|^2 ],
//   q_a = e^{i (k_R - k_L).r_a} e^{-i 2 pi l (a_phi - 1)/n_phi},
//   G_ab = p_b* . p_a,   d_a = p_a . R-hat.
// The Hermitian form is real up to roundoff; the imaginary residue is a
// consistency diagnostic and must stay below 1e-9.
template <class Scalar = double>
class FarFieldEvaluator {
 public:
  FarFieldEvaluator(const AtomArray<Scalar>& array, const DipoleField<Scalar>& field, int l)
      : pos_(array.positions),
        orient_(field.orientations),
        gram_(field.orientations * field.orientations.adjoint()),
        hpi_(array.size()) {
    if (field.size() != array.size())
      throw ConfigError("dipole field size does not match atom count");
    const int l_eff = ((l % array.n_phi) + array.n_phi) % array.n_phi;
    for (int i = 0; i < array.size(); ++i)
      hpi_(i) = two_pi_v<Scalar> * Scalar(l_eff) * Scalar(array.azimuth_index(i) - 1) /
                Scalar(array.n_phi);
  }

  struct Sample {
    Scalar value;
    Scalar imag_residue;
  };

  Sample eval(Scalar theta, Scalar phi) const {
    using C = std::complex<Scalar>;
    const int n = static_cast<int>(pos_.rows());
    const Scalar st = std::sin(theta), ct = std::cos(theta);
    const Vec3<Scalar> rhat(st * std::cos(phi), st * std::sin(phi), ct);

    CVecX<Scalar> q(n);
    for (int a = 0; a < n; ++a) {
      const Scalar phase = two_pi_v<Scalar> * (pos_.row(a).dot(rhat) - pos_(a, 2)) - hpi_(a);
      q(a) = std::exp(C(Scalar(0), phase));
    }
    const C s1 = (q.array() * (gram_ * q.conjugate()).array()).sum();
    const C dq = ((orient_ * rhat.template cast<C>()).array() * q.array()).sum();

    Sample out;
    out.value = (s1.real() - std::norm(dq)) / Scalar(n);
    out.imag_residue = std::abs(s1.imag()) / Scalar(n);
    return out;
  }

  int size() const { return static_cast<int>(pos_.rows()); }

 private:
  Points<Scalar> pos_;
  CPoints<Scalar> orient_;
  CMatX<Scalar> gram_;
  VecX<Scalar> hpi_;
};

template <class Scalar>
Scalar omega_f(const AtomArray<Scalar>& array, const DipoleField<Scalar>& field, int l, Scalar theta,
               Scalar phi) {
  const auto s = FarFieldEvaluator<Scalar>(array, field, l).eval(theta, phi);
  if (s.imag_residue > Scalar(1e-9))
    throw ConsistencyError("far-field imaginary residue " +
                           std::to_string(static_cast<double>(s.imag_residue)) + " exceeds 1e-9");
  return s.value;
}

// Equiangular intensity map: theta on [0, pi] inclusive (n_theta points), phi
// on [0, 2*pi) half-open (n_phi points).  Values are clamped to zero when a
// roundoff-negative in (-1e-10, 0) appears; anything below -1e-10 is an error.
template <class Scalar = double>
struct FarFieldMap {
  VecX<Scalar> theta;
  VecX<Scalar> phi;
  MatX<Scalar> values;  // n_theta x n_phi
  int l = 0;
  Polarization family = Polarization::linear_x;
  int clamped = 0;
  Scalar max_imag_residue = Scalar(0);
  Scalar min_raw_value = Scalar(0);
};

template <class Scalar>
FarFieldMap<Scalar> far_field_map(const AtomArray<Scalar>& array, const DipoleField<Scalar>& field,
                                  int l, int n_theta = 181, int n_phi = 360, int threads = 0) {
  if (n_theta < 2 || n_phi < 1) throw ConfigError("far-field grid requires n_theta >= 2, n_phi >= 1");
  const FarFieldEvaluator<Scalar> ev(array, field, l);

  FarFieldMap<Scalar> map;
  map.l = l;
  map.family = field.family;
  map.theta.resize(n_theta);
  for (int i = 0; i < n_theta; ++i) map.theta(i) = pi_v<Scalar> * Scalar(i) / Scalar(n_theta - 1);
  map.phi.resize(n_phi);
  for (int j = 0; j < n_phi; ++j) map.phi(j) = two_pi_v<Scalar> * Scalar(j) / Scalar(n_phi);
  map.values.resize(n_theta, n_phi);

  int n_workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::clamp(n_workers, 1, n_theta);

  std::vector<Scalar> row_max_imag(n_theta, Scalar(0));
  std::vector<Scalar> row_min_raw(n_theta, Scalar(0));
  std::vector<int> row_clamped(n_theta, 0);
  std::vector<std::exception_ptr> row_error(n_theta);

  auto run_rows = [&](int begin, int stride) {
    for (int i = begin; i < n_theta; i += stride) {
      try {
        for (int j = 0; j < n_phi; ++j) {
          const auto s = ev.eval(map.theta(i), map.phi(j));
          row_max_imag[i] = std::max(row_max_imag[i], s.imag_residue);
          Scalar v = s.value;
          if (v < Scalar(0)) {
            row_min_raw[i] = std::min(row_min_raw[i], v);
            v = Scalar(0);
            ++row_clamped[i];
          }
          map.values(i, j) = v;
        }
      } catch (...) {
        row_error[i] = std::current_exception();
        return;
      }
    }
  };

  if (n_workers == 1) {
    run_rows(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(run_rows, w, n_workers);
    for (auto& t : pool) t.join();
  }

  for (int i = 0; i < n_theta; ++i) {
    if (row_error[i]) std::rethrow_exception(row_error[i]);
    map.max_imag_residue = std::max(map.max_imag_residue, row_max_imag[i]);
    map.min_raw_value = std::min(map.min_raw_value, row_min_raw[i]);
    map.clamped += row_clamped[i];
  }
  if (map.max_imag_residue > Scalar(1e-9))
    throw ConsistencyError("far-field imaginary residue " +
                           std::to_string(static_cast<double>(map.max_imag_residue)) +
                           " exceeds 1e-9");
  if (map.min_raw_value < Scalar(-1e-10))
    throw ConsistencyError("far-field value " + std::to_string(static_cast<double>(map.min_raw_value)) +
                           " below the -1e-10 negativity floor");
  if (!map.values.allFinite()) throw ConsistencyError("far-field map contains non-finite values");
  return map;
}

// Total emission rate (units of Gamma): (3/8pi) * integral of Omega over the
// sphere, by Gauss-Legendre in cos(theta) x uniform phi.  Equals the initial
// decay rate -d|h_l|^2/dt at t=0.
template <class Scalar>
Scalar sphere_integral(const AtomArray<Scalar>& array, const DipoleField<Scalar>& field, int l,
                       const SphereQuadrature<Scalar>& quad) {
  const FarFieldEvaluator<Scalar> ev(array, field, l);
  Scalar total(0);
  for (Eigen::Index i = 0; i < quad.theta.size(); ++i) {
    Scalar row(0);
    for (Eigen::Index j = 0; j < quad.phi.size(); ++j) row += ev.eval(quad.theta(i), quad.phi(j)).value;
    total += quad.theta_weight(i) * row;
  }
  return total * quad.phi_weight * Scalar(3) / (Scalar(8) * pi_v<Scalar>);
}

// Trapezoid estimate of the same normalized integral on an existing map grid.
template <class Scalar>
Scalar integrate(const FarFieldMap<Scalar>& map) {
  const int n_theta = static_cast<int>(map.theta.size());
  const int n_phi = static_cast<int>(map.phi.size());
  const Scalar dtheta = pi_v<Scalar> / Scalar(n_theta - 1);
  const Scalar dphi = two_pi_v<Scalar> / Scalar(n_phi);
  Scalar total(0);
  for (int i = 0; i < n_theta; ++i) {
    const Scalar w = (i == 0 || i == n_theta - 1) ? Scalar(0.5) : Scalar(1);
    total += w * std::sin(map.theta(i)) * map.values.row(i).sum();
  }
  return total * dtheta * dphi * Scalar(3) / (Scalar(8) * pi_v<Scalar>);
}

// (3/8pi) * integral of [G_ab - d_a conj(d_b)] e^{i k R-hat.r_ab} dOmega; the
// angular identity ties this back to the pair kernel's f (in units of Gamma).
template <class DA, class DB, class DR>
std::complex<typename DR::Scalar> pair_angular_integral(const Eigen::MatrixBase<DA>& p_a,
                                                        const Eigen::MatrixBase<DB>& p_b,
                                                        const Eigen::MatrixBase<DR>& r_ab,
                                                        const SphereQuadrature<typename DR::Scalar>& quad) {
  using Scalar = typename DR::Scalar;
  using C = std::complex<Scalar>;
  C g_ab(0);
  for (int i = 0; i < 3; ++i) g_ab += std::conj(C(p_b[i])) * C(p_a[i]);

  C total(0);
  for (Eigen::Index i = 0; i < quad.theta.size(); ++i) {
    const Scalar st = std::sin(quad.theta(i)), ct = std::cos(quad.theta(i));
    for (Eigen::Index j = 0; j < quad.phi.size(); ++j) {
      const Vec3<Scalar> rhat(st * std::cos(quad.phi(j)), st * std::sin(quad.phi(j)), ct);
      C d_a(0), d_b(0);
      for (int k = 0; k < 3; ++k) {
        d_a += C(p_a[k]) * rhat[k];
        d_b += C(p_b[k]) * rhat[k];
      }
      const C phase = std::exp(C(Scalar(0), two_pi_v<Scalar> * rhat.dot(r_ab)));
      total += quad.theta_weight(i) * (g_ab - d_a * std::conj(d_b)) * phase;
    }
  }
  return Scalar(3) / (Scalar(8) * pi_v<Scalar>)*total* quad.phi_weight;
}

// ---- pattern statistics / symmetry checks -----------------------------------

template <class Scalar = double>
struct SymmetryReport {
  // Quarter-turn invariance, relative to the pattern maximum.  For linear
  // polarizations this compares the map against the quarter-rotated map of the
  // orthogonal linear family (the pattern itself is not C4-invariant); for
  // rotation-invariant families it is a single-map comparison.  Absent when
  // the array lacks the 4 | n_phi symmetry.
  std::optional<Scalar> c4_deviation;
  // Single-map 2*pi/n_phi rotation invariance; absent for linear families
  // (not a symmetry of their patterns).
  std::optional<Scalar> cn_deviation;
  // Map equality under l -> n_phi - l.
  Scalar mirror_l_deviation = Scalar(0);
  Scalar polar_forward = Scalar(0);    // Omega(0)
  Scalar polar_backward = Scalar(0);   // Omega(pi)
  Scalar polar_ratio = Scalar(0);      // NaN when 0/0
  Scalar forward_hemisphere_max = Scalar(0);
  Scalar backward_hemisphere_max = Scalar(0);
  Scalar hemisphere_ratio = Scalar(0);
  Scalar peak_theta = Scalar(0);
  Scalar peak_phi = Scalar(0);
  Scalar peak_value = Scalar(0);
  Scalar fwhm_theta = Scalar(0);
  Scalar fwhm_phi = Scalar(0);
  int azimuthal_peak_count = 0;        // 0 when the peak row is azimuthally flat
  Scalar azimuthal_peak_spread = Scalar(0);
};

namespace detail {

// max |A(i,j) - B(i, j+shift mod n)| / max |B|.
template <class Scalar>
Scalar rotated_deviation(const MatX<Scalar>& a, const MatX<Scalar>& b, int shift) {
  const int n_phi = static_cast<int>(a.cols());
  const Scalar scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  if (!(scale > Scalar(0))) return Scalar(0);
  Scalar dev(0);
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < n_phi; ++j)
      dev = std::max(dev, std::abs(a(i, j) - b(i, (j + shift) % n_phi)));
  return dev / scale;
}

template <class Scalar>
Scalar half_crossing(Scalar x_in, Scalar x_out, Scalar v_in, Scalar v_out, Scalar half) {
  if (v_in == v_out) return x_out;
  return x_in + (x_out - x_in) * (v_in - half) / (v_in - v_out);
}

}  // namespace detail

template <class Scalar>
SymmetryReport<Scalar> symmetry_report(const FarFieldMap<Scalar>& map, const AtomArray<Scalar>& array,
                                       const DipoleField<Scalar>& field, int threads = 0) {
  const int n_theta = static_cast<int>(map.theta.size());
  const int n_phi = static_cast<int>(map.phi.size());
  const bool linear =
      field.family == Polarization::linear_x || field.family == Polarization::linear_y;

  SymmetryReport<Scalar> rep;

  // Rotation checks.  The grid must subdivide each tested turn exactly.
  if (array.n_phi % 4 == 0) {
    if (n_phi % 4 != 0)
      throw ConfigError("C4 check needs the phi grid divisible by 4; got " + std::to_string(n_phi) +
                        " (use e.g. " + std::to_string((n_phi / 4 + 1) * 4) + ")");
    if (linear) {
      const auto partner = field.family == Polarization::linear_x ? Polarization::linear_y
                                                                  : Polarization::linear_x;
      const auto pm = far_field_map(array, uniform_field(array, partner), map.l, n_theta, n_phi, threads);
      rep.c4_deviation = detail::rotated_deviation(pm.values, map.values, n_phi / 4);
    } else {
      rep.c4_deviation = detail::rotated_deviation(map.values, map.values, n_phi / 4);
    }
  }
  if (!linear) {
    if (n_phi % array.n_phi != 0)
      throw ConfigError("C_N check needs the phi grid divisible by n_phi = " +
                        std::to_string(array.n_phi) + "; got " + std::to_string(n_phi) + " (use e.g. " +
                        std::to_string((n_phi / array.n_phi + 1) * array.n_phi) + ")");
    rep.cn_deviation = detail::rotated_deviation(map.values, map.values, n_phi / array.n_phi);
  }

  {
    const int l_mirror = ((array.n_phi - map.l) % array.n_phi + array.n_phi) % array.n_phi;
    const auto mm = far_field_map(array, field, l_mirror, n_theta, n_phi, threads);
    rep.mirror_l_deviation = detail::rotated_deviation(map.values, mm.values, 0);
  }

  rep.polar_forward = map.values.row(0).maxCoeff();
  rep.polar_backward = map.values.row(n_theta - 1).maxCoeff();
  rep.polar_ratio = rep.polar_forward / rep.polar_backward;  // may be NaN (0/0)

  for (int i = 0; i < n_theta; ++i) {
    const Scalar row_max = map.values.row(i).maxCoeff();
    if (map.theta(i) < pi_v<Scalar> / 2 - Scalar(1e-12))
      rep.forward_hemisphere_max = std::max(rep.forward_hemisphere_max, row_max);
    else if (map.theta(i) > pi_v<Scalar> / 2 + Scalar(1e-12))
      rep.backward_hemisphere_max = std::max(rep.backward_hemisphere_max, row_max);
  }
  rep.hemisphere_ratio = rep.forward_hemisphere_max / rep.backward_hemisphere_max;

  int pi_idx = 0, pj_idx = 0;
  rep.peak_value = map.values.maxCoeff(&pi_idx, &pj_idx);
  rep.peak_theta = map.theta(pi_idx);
  rep.peak_phi = map.phi(pj_idx);

  // FWHM along theta through the peak (non-periodic walk, clamped at poles).
  if (rep.peak_value > Scalar(0)) {
    const Scalar half = rep.peak_value / 2;
    Scalar lo = map.theta(0), hi = map.theta(n_theta - 1);
    for (int i = pi_idx; i > 0; --i)
      if (map.values(i - 1, pj_idx) < half) {
        lo = detail::half_crossing(map.theta(i), map.theta(i - 1), map.values(i, pj_idx),
                                   map.values(i - 1, pj_idx), half);
        break;
      }
    for (int i = pi_idx; i + 1 < n_theta; ++i)
      if (map.values(i + 1, pj_idx) < half) {
        hi = detail::half_crossing(map.theta(i), map.theta(i + 1), map.values(i, pj_idx),
                                   map.values(i + 1, pj_idx), half);
        break;
      }
    rep.fwhm_theta = hi - lo;

    // FWHM along phi (periodic walk, capped at a full turn).
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> row = map.values.row(pi_idx);
    const Scalar dphi = two_pi_v<Scalar> / Scalar(n_phi);
    Scalar left = -pi_v<Scalar>, right = pi_v<Scalar>;
    for (int step = 1; step < n_phi; ++step) {
      const int j = ((pj_idx - step) % n_phi + n_phi) % n_phi;
      const int j_in = ((pj_idx - step + 1) % n_phi + n_phi) % n_phi;
      if (row(j) < half) {
        left = detail::half_crossing(-Scalar(step - 1) * dphi, -Scalar(step) * dphi, row(j_in), row(j), half);
        break;
      }
    }
    for (int step = 1; step < n_phi; ++step) {
      const int j = (pj_idx + step) % n_phi;
      const int j_in = (pj_idx + step - 1) % n_phi;
      if (row(j) < half) {
        right = detail::half_crossing(Scalar(step - 1) * dphi, Scalar(step) * dphi, row(j_in), row(j), half);
        break;
      }
    }
    rep.fwhm_phi = right - left;

    // Peaks around the azimuth at the peak's theta row.
    const Scalar row_max = row.maxCoeff(), row_min = row.minCoeff();
    if (row_max - row_min > Scalar(1e-12) * row_max) {
      Scalar lowest_peak = row_max;
      for (int j = 0; j < n_phi; ++j) {
        const Scalar prev = row((j - 1 + n_phi) % n_phi), next = row((j + 1) % n_phi);
        if (row(j) > prev && row(j) >= next) {
          ++rep.azimuthal_peak_count;
          lowest_peak = std::min(lowest_peak, row(j));
        }
      }
      rep.azimuthal_peak_spread = (row_max - lowest_peak) / row_max;
    }
  }
  return rep;
}

}  // namespace ringscatter
