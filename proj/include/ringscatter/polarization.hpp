#pragma once

#include "ringscatter/common.hpp"
#include "ringscatter/geometry.hpp"

#include <cmath>
#include <string>

namespace ringscatter {

enum class Polarization {
  linear_x,
  linear_y,
  circular_plus,
  circular_minus,
  radial,
  azimuthal,
};

inline const char* to_string(Polarization p) {
  switch (p) {
    case Polarization::linear_x:       return "linear_x";
    case Polarization::linear_y:       return "linear_y";
    case Polarization::circular_plus:  return "circular_plus";
    case Polarization::circular_minus: return "circular_minus";
    case Polarization::radial:         return "radial";
    case Polarization::azimuthal:      return "azimuthal";
  }
  return "?";
}

inline Polarization parse_polarization(const std::string& name) {
  if (name == "linear_x") return Polarization::linear_x;
  if (name == "linear_y") return Polarization::linear_y;
  if (name == "circular_plus") return Polarization::circular_plus;
  if (name == "circular_minus") return Polarization::circular_minus;
  if (name == "radial") return Polarization::radial;
  if (name == "azimuthal") return Polarization::azimuthal;
  throw ConfigError("unknown polarization \"" + name +
                    "\"; expected one of linear_x, linear_y, circular_plus, "
                    "circular_minus, radial, azimuthal");
}

// Uniform families share one orientation vector; radial/azimuthal vary per atom.
inline bool is_uniform(Polarization p) {
  return p != Polarization::radial && p != Polarization::azimuthal;
}

// Unit dipole orientation per atom, one row each.
template <class Scalar = double>
struct DipoleField {
  CPoints<Scalar> orientations;
  Polarization family = Polarization::linear_x;

  int size() const { return static_cast<int>(orientations.rows()); }
};

template <class Scalar>
DipoleField<Scalar> uniform_field(const AtomArray<Scalar>& array, Polarization family) {
  using C = std::complex<Scalar>;
  if (!is_uniform(family))
    throw ConfigError(std::string("polarization ") + to_string(family) + " is not a uniform family");
  CVec3<Scalar> e;
  const Scalar inv_sqrt2 = Scalar(1) / std::sqrt(Scalar(2));
  switch (family) {
    case Polarization::linear_x:       e << C(1), C(0), C(0); break;
    case Polarization::linear_y:       e << C(0), C(1), C(0); break;
    case Polarization::circular_plus:  e << C(inv_sqrt2), C(0, inv_sqrt2), C(0); break;
    case Polarization::circular_minus: e << C(inv_sqrt2), C(0, -inv_sqrt2), C(0); break;
    default: break;
  }
  DipoleField<Scalar> field;
  field.family = family;
  field.orientations = e.transpose().replicate(array.size(), 1);
  return field;
}

// Radial e_r(alpha) = (cos, sin, 0), azimuthal e_phi(alpha) = (-sin, cos, 0)
// at phi(alpha) = 2*pi*alpha_phi / n_phi.  Note the angle is one azimuthal
// step ahead of the atom position's angle 2*pi*(alpha_phi-1)/n_phi -- a rigid
// rotation of the whole field, kept verbatim from the model's definition, so
// patterns for these families match rotated variants only up to that offset.
template <class Scalar>
DipoleField<Scalar> spatial_field(const AtomArray<Scalar>& array, Polarization family) {
  using C = std::complex<Scalar>;
  if (is_uniform(family))
    throw ConfigError(std::string("polarization ") + to_string(family) + " is not a spatial family");
  DipoleField<Scalar> field;
  field.family = family;
  field.orientations.resize(array.size(), 3);
  for (int i = 0; i < array.size(); ++i) {
    const Scalar phi = two_pi_v<Scalar> * Scalar(array.azimuth_index(i)) / Scalar(array.n_phi);
    if (family == Polarization::radial)
      field.orientations.row(i) << C(std::cos(phi)), C(std::sin(phi)), C(0);
    else
      field.orientations.row(i) << C(-std::sin(phi)), C(std::cos(phi)), C(0);
  }
  return field;
}

template <class Scalar>
DipoleField<Scalar> make_field(const AtomArray<Scalar>& array, Polarization family) {
  return is_uniform(family) ? uniform_field(array, family) : spatial_field(array, family);
}

}  // namespace ringscatter
