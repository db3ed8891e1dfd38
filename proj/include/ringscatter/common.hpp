#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

// Conventions used throughout: lengths in units of the transition wavelength
// (so |k_L| = 2*pi and the drive travels along +z), rates in units of the
// single-atom decay rate Gamma, times in 1/Gamma.
namespace ringscatter {

template <class Scalar>
inline constexpr Scalar pi_v = std::numbers::pi_v<Scalar>;

template <class Scalar>
inline constexpr Scalar two_pi_v = Scalar(2) * std::numbers::pi_v<Scalar>;

template <class Scalar> using Vec3  = Eigen::Matrix<Scalar, 3, 1>;
template <class Scalar> using CVec3 = Eigen::Matrix<std::complex<Scalar>, 3, 1>;
template <class Scalar> using VecX  = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar> using CVecX = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <class Scalar> using MatX  = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar> using CMatX = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

// One row per atom.
template <class Scalar> using Points  = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;
template <class Scalar> using CPoints = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 3>;

// Solver-layer failures (CLI maps these to exit code 3).
class PhysicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Atoms closer than the separation floor; the pair kernel diverges as xi^-3.
class SingularKernelError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

// Eigenbasis condition number above the defect threshold; eigenmode
// projections are unreliable, use the direct propagator instead.
class IllConditionedError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

// A numerical identity the model guarantees failed to hold (sum rule,
// residual bound, imaginary far-field residue, ...).
class ConsistencyError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

// Bad user-facing configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem failures while emitting results (CLI exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ringscatter
