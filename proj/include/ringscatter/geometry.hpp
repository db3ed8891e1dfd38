#pragma once

#include "ringscatter/common.hpp"

#include <cmath>
#include <string>

namespace ringscatter {

enum class StackKind { single_ring, z_stack, r_stack };

inline const char* to_string(StackKind k) {
  switch (k) {
    case StackKind::single_ring: return "single_ring";
    case StackKind::z_stack:     return "z_stack";
    case StackKind::r_stack:     return "r_stack";
  }
  return "?";
}

// Geometry request: n_phi atoms per ring of radius r (lambda units), plus the
// stacking axis. z_stack: n_z copies spaced d_z apart, centered on z = 0.
// r_stack: s concentric coplanar rings of radii r, 2r, ..., s*r.
template <class Scalar = double>
struct RingSpec {
  int n_phi = 1;
  Scalar r = Scalar(0.5);
  StackKind stack = StackKind::single_ring;
  int n_z = 1;
  Scalar d_z = Scalar(0);
  int s = 1;
  Scalar min_separation = Scalar(1e-6);
};

// Built array: positions plus the (ring, azimuth) index map, both 1-based to
// match the mu = (mu_ring, mu_phi) labeling of the model.
template <class Scalar = double>
struct AtomArray {
  Points<Scalar> positions;      // one row per atom
  Eigen::VectorXi ring_index;    // 1..n_rings
  Eigen::VectorXi azimuth_index; // 1..n_phi
  int n_phi = 0;
  int n_rings = 1;

  int size() const { return static_cast<int>(positions.rows()); }
};

template <class Scalar>
Scalar min_pair_distance(const Points<Scalar>& pos) {
  const auto n = pos.rows();
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b)
      best = std::min(best, (pos.row(a) - pos.row(b)).norm());
  return best;
}

template <class Scalar>
AtomArray<Scalar> build_array(const RingSpec<Scalar>& spec) {
  if (spec.n_phi < 1)
    throw ConfigError("ring.n_phi must be a positive integer, got " + std::to_string(spec.n_phi));
  if (!(spec.r > Scalar(0)))
    throw ConfigError("ring.r must be positive, got " + std::to_string(static_cast<double>(spec.r)));
  if (spec.stack == StackKind::z_stack) {
    if (spec.n_z < 1) throw ConfigError("ring.n_z must be a positive integer");
    if (spec.n_z > 1 && !(spec.d_z > Scalar(0)))
      throw ConfigError("ring.d_z must be positive for a z_stack of more than one ring");
  }
  if (spec.stack == StackKind::r_stack && spec.s < 1)
    throw ConfigError("ring.s must be a positive integer");

  const int n_rings = spec.stack == StackKind::z_stack   ? spec.n_z
                      : spec.stack == StackKind::r_stack ? spec.s
                                                         : 1;
  const int n = n_rings * spec.n_phi;

  AtomArray<Scalar> array;
  array.positions.resize(n, 3);
  array.ring_index.resize(n);
  array.azimuth_index.resize(n);
  array.n_phi = spec.n_phi;
  array.n_rings = n_rings;

  int row = 0;
  for (int j = 1; j <= n_rings; ++j) {
    const Scalar radius = spec.stack == StackKind::r_stack ? Scalar(j) * spec.r : spec.r;
    const Scalar z = spec.stack == StackKind::z_stack
                         ? (Scalar(j) - Scalar(n_rings + 1) / Scalar(2)) * spec.d_z
                         : Scalar(0);
    for (int a = 1; a <= spec.n_phi; ++a, ++row) {
      const Scalar phi = two_pi_v<Scalar> * Scalar(a - 1) / Scalar(spec.n_phi);
      array.positions.row(row) << radius * std::cos(phi), radius * std::sin(phi), z;
      array.ring_index(row) = j;
      array.azimuth_index(row) = a;
    }
  }

  if (n > 1) {
    const Scalar dmin = min_pair_distance(array.positions);
    if (dmin < spec.min_separation)
      throw SingularKernelError("atom pair at distance " + std::to_string(static_cast<double>(dmin)) +
                                " lambda, below the separation floor " +
                                std::to_string(static_cast<double>(spec.min_separation)));
  }
  return array;
}

}  // namespace ringscatter
