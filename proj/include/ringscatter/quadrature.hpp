#pragma once

#include "ringscatter/common.hpp"

#include <cmath>

namespace ringscatter {

// Gauss-Legendre nodes/weights on [-1, 1], nodes ascending.  Newton iteration
// on P_n with the usual Chebyshev-like initial guess; exact for polynomials
// of degree 2n-1.
template <class Scalar = double>
struct GaussLegendre {
  VecX<Scalar> nodes;
  VecX<Scalar> weights;
};

template <class Scalar = double>
GaussLegendre<Scalar> gauss_legendre(int n) {
  if (n < 1) throw ConfigError("gauss_legendre order must be positive");
  GaussLegendre<Scalar> q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    Scalar x = std::cos(pi_v<Scalar> * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = Scalar(0);
    for (int it = 0; it < 100; ++it) {
      // Recurrence for P_n(x) and P_{n-1}(x).
      Scalar p0 = Scalar(1), p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / Scalar(k);
        p0 = p1;
        p1 = p2;
      }
      dp = Scalar(n) * (x * p1 - p0) / (x * x - Scalar(1));
      const Scalar dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < Scalar(1e-16)) break;
    }
    q.nodes(i) = -x;
    q.nodes(n - 1 - i) = x;
    const Scalar w = Scalar(2) / ((Scalar(1) - x * x) * dp * dp);
    q.weights(i) = w;
    q.weights(n - 1 - i) = w;
  }
  return q;
}

// Product rule on the unit sphere: Gauss-Legendre in cos(theta), uniform
// (trapezoid on a periodic function) in phi.  Spectrally convergent for the
// smooth integrands here; sum of weights is 4*pi.
template <class Scalar = double>
struct SphereQuadrature {
  VecX<Scalar> theta;         // from the cos(theta) nodes
  VecX<Scalar> theta_weight;  // Gauss-Legendre weights
  VecX<Scalar> phi;           // n_phi uniform points on [0, 2*pi)
  Scalar phi_weight;
};

template <class Scalar = double>
SphereQuadrature<Scalar> sphere_quadrature(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1) throw ConfigError("sphere quadrature sizes must be positive");
  const auto gl = gauss_legendre<Scalar>(n_theta);
  SphereQuadrature<Scalar> q;
  q.theta = gl.nodes.reverse().array().acos().matrix();  // theta ascending
  q.theta_weight = gl.weights.reverse();
  q.phi.resize(n_phi);
  for (int j = 0; j < n_phi; ++j) q.phi(j) = two_pi_v<Scalar> * Scalar(j) / Scalar(n_phi);
  q.phi_weight = two_pi_v<Scalar> / Scalar(n_phi);
  return q;
}

}  // namespace ringscatter
