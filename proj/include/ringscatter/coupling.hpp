#pragma once

#include "ringscatter/common.hpp"
#include "ringscatter/geometry.hpp"
#include "ringscatter/polarization.hpp"

#include <cmath>
#include <string>

namespace ringscatter {

// Pairwise collective rate f and shift g (units of Gamma).  Both are real for
// every field family this artifact builds; the complex type covers general
// complex dipole orientations.
template <class Scalar = double>
struct PairKernel {
  std::complex<Scalar> f;
  std::complex<Scalar> g;
};

// Evaluate the pair kernel for dipoles p_a, p_b separated by r_ab = r_a - r_b:
//   f = (3/2) [ A sin(xi)/xi + B (cos(xi)/xi^2 - sin(xi)/xi^3) ]
//   g = (3/4) [ -A cos(xi)/xi + B (sin(xi)/xi^2 + cos(xi)/xi^3) ]
// with xi = 2*pi*|r_ab|, A = p_b*.p_a - (p_b*.rhat)(p_a.rhat) and B the same
// combination with the projector term tripled.
template <class DA, class DB, class DR>
PairKernel<typename DR::Scalar> pair_kernel(const Eigen::MatrixBase<DA>& p_a,
                                            const Eigen::MatrixBase<DB>& p_b,
                                            const Eigen::MatrixBase<DR>& r_ab) {
  using Scalar = typename DR::Scalar;
  using C = std::complex<Scalar>;

  const Scalar dist = r_ab.norm();
  if (!(dist > Scalar(0)))
    throw SingularKernelError("pair kernel evaluated at zero separation");
  const Vec3<Scalar> rhat = r_ab / dist;

  C pp(0), br(0), ar(0);
  for (int i = 0; i < 3; ++i) {
    pp += std::conj(C(p_b[i])) * C(p_a[i]);
    br += std::conj(C(p_b[i])) * rhat[i];
    ar += C(p_a[i]) * rhat[i];
  }
  const C a = pp - br * ar;
  const C b = pp - Scalar(3) * br * ar;

  const Scalar xi = two_pi_v<Scalar> * dist;
  const Scalar s = std::sin(xi), c = std::cos(xi);
  const Scalar xi2 = xi * xi, xi3 = xi2 * xi;

  PairKernel<Scalar> k;
  k.f = Scalar(1.5) * (a * (s / xi) + b * (c / xi2 - s / xi3));
  k.g = Scalar(0.75) * (-a * (c / xi) + b * (s / xi2 + c / xi3));
  return k;
}

// Gauged coupling matrix M: generator of the single-excitation amplitudes once
// the drive's traveling phase e^{i k_L . r} has been absorbed,
//   M_ab = [ -F_ab + i 2 G_ab (a != b) ] e^{-i k_L.(r_a - r_b)} / 2,
// diagonal exactly -Gamma/2.  k_L = 2*pi zhat.
template <class Scalar = double>
struct CouplingMatrix {
  CMatX<Scalar> m;
  Vec3<Scalar> k_l;
  Scalar min_f_eigenvalue = Scalar(0);  // PSD witness for the F matrix
};

template <class Scalar>
CouplingMatrix<Scalar> build_matrix(const AtomArray<Scalar>& array, const DipoleField<Scalar>& field) {
  using C = std::complex<Scalar>;
  const int n = array.size();
  if (field.size() != n)
    throw ConfigError("dipole field size " + std::to_string(field.size()) +
                      " does not match atom count " + std::to_string(n));

  CouplingMatrix<Scalar> cm;
  cm.k_l = Vec3<Scalar>(Scalar(0), Scalar(0), two_pi_v<Scalar>);
  cm.m.resize(n, n);
  CMatX<Scalar> fmat(n, n);

  for (int mu = 0; mu < n; ++mu) {
    cm.m(mu, mu) = C(Scalar(-0.5), Scalar(0));
    fmat(mu, mu) = C(Scalar(1), Scalar(0));
    for (int nu = 0; nu < n; ++nu) {
      if (nu == mu) continue;
      const Vec3<Scalar> r_ab = (array.positions.row(mu) - array.positions.row(nu)).transpose();
      const auto k = pair_kernel(field.orientations.row(mu).transpose(),
                                 field.orientations.row(nu).transpose(), r_ab);
      const C gauge = std::exp(C(Scalar(0), -cm.k_l.dot(r_ab)));
      cm.m(mu, nu) = (-k.f + C(Scalar(0), Scalar(2)) * k.g) * gauge / Scalar(2);
      fmat(mu, nu) = k.f;
    }
  }

  // F drives the decay; it must be positive semidefinite or total emission
  // could go negative.  Checked on every build.
  Eigen::SelfAdjointEigenSolver<CMatX<Scalar>> es(fmat, Eigen::EigenvaluesOnly);
  cm.min_f_eigenvalue = es.eigenvalues().minCoeff();
  if (cm.min_f_eigenvalue < Scalar(-1e-9))
    throw ConsistencyError("decay matrix F has eigenvalue " +
                           std::to_string(static_cast<double>(cm.min_f_eigenvalue)) +
                           " Gamma, below the -1e-9 PSD floor");
  return cm;
}

}  // namespace ringscatter
