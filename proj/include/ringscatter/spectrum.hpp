#pragma once

#include "ringscatter/common.hpp"
#include "ringscatter/coupling.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace ringscatter {

// Eigendecomposition M = U diag(lambda) U^-1, modes sorted by decay rate
// Gamma_m = -2 Re(lambda_m) ascending (ties broken by Im(lambda) ascending).
template <class Scalar = double>
struct EigenSystem {
  CVecX<Scalar> lambdas;
  CMatX<Scalar> u;
  CMatX<Scalar> u_inv;
  Scalar condition_number = Scalar(1);
  bool ill_conditioned = false;  // cond(U) > 1e12: near-defective
  Scalar max_residual = Scalar(0);   // max_k ||M u_k - lambda_k u_k|| / ||M||_F
  Scalar max_identity_error = Scalar(0);  // ||U U^-1 - I||_max

  int size() const { return static_cast<int>(lambdas.size()); }
};

template <class Scalar>
EigenSystem<Scalar> eigendecompose(const CouplingMatrix<Scalar>& cm) {
  const int n = static_cast<int>(cm.m.rows());

  Eigen::ComplexEigenSolver<CMatX<Scalar>> ces(cm.m, /*computeEigenvectors=*/true);
  if (ces.info() != Eigen::Success)
    throw PhysicsError("eigen-iteration failed to converge on the " + std::to_string(n) + "x" +
                       std::to_string(n) + " coupling matrix; re-run with --dump-matrix to inspect it");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& raw = ces.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const Scalar ra = -2 * raw(a).real(), rb = -2 * raw(b).real();
    if (ra != rb) return ra < rb;
    return raw(a).imag() < raw(b).imag();
  });

  EigenSystem<Scalar> sys;
  sys.lambdas.resize(n);
  sys.u.resize(n, n);
  for (int k = 0; k < n; ++k) {
    sys.lambdas(k) = raw(order[k]);
    sys.u.col(k) = ces.eigenvectors().col(order[k]);
  }

  Eigen::BDCSVD<CMatX<Scalar>> svd(sys.u);
  const Scalar smin = svd.singularValues()(n - 1);
  sys.condition_number = smin > Scalar(0) ? svd.singularValues()(0) / smin
                                          : std::numeric_limits<Scalar>::infinity();
  sys.ill_conditioned = !(sys.condition_number <= Scalar(1e12));

  sys.u_inv = sys.u.partialPivLu().inverse();

  const Scalar m_norm = cm.m.norm();
  sys.max_residual =
      (cm.m * sys.u - sys.u * sys.lambdas.asDiagonal()).colwise().norm().maxCoeff() / m_norm;
  if (sys.max_residual > Scalar(1e-9))
    throw ConsistencyError("eigenpair residual " + std::to_string(static_cast<double>(sys.max_residual)) +
                           " exceeds 1e-9 of ||M||");
  sys.max_identity_error =
      (sys.u * sys.u_inv - CMatX<Scalar>::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!sys.ill_conditioned && sys.max_identity_error > Scalar(1e-9))
    throw ConsistencyError("U * U^-1 deviates from identity by " +
                           std::to_string(static_cast<double>(sys.max_identity_error)));
  return sys;
}

// Decay rates Gamma_m = -2 Re(lambda_m), ascending.  Tiny negatives from
// eigensolver roundoff are clamped to zero; the diagnostic records them.
template <class Scalar = double>
struct DecayRates {
  VecX<Scalar> rates;
  int clamped = 0;
  Scalar most_negative_raw = Scalar(0);
};

template <class Scalar>
DecayRates<Scalar> decay_rates(const EigenSystem<Scalar>& sys) {
  DecayRates<Scalar> out;
  out.rates = (-2 * sys.lambdas.real().array()).matrix();
  for (int k = 0; k < sys.size(); ++k) {
    if (out.rates(k) < Scalar(0)) {
      out.most_negative_raw = std::min(out.most_negative_raw, out.rates(k));
      out.rates(k) = Scalar(0);
      ++out.clamped;
    }
  }
  return out;
}

// Trace identity sum_m Gamma_m = N * Gamma; returns the relative deviation.
template <class Scalar>
Scalar sum_rule_deviation(const EigenSystem<Scalar>& sys) {
  const Scalar total = (-2 * sys.lambdas.real().array()).sum();
  return std::abs(total - Scalar(sys.size())) / Scalar(sys.size());
}

}  // namespace ringscatter
