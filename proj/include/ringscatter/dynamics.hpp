#pragma once

#include "ringscatter/common.hpp"
#include "ringscatter/coupling.hpp"
#include "ringscatter/geometry.hpp"
#include "ringscatter/spectrum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace ringscatter {

// Helical-phase-imprinted single-excitation state with winding number l.
// amplitudes carries the full c_mu = e^{i k_L.r_mu} e^{i 2 pi l (mu_phi-1)/n_phi} / sqrt(N);
// gauged drops the traveling phase and is the vector the gauged generator M,
// the eigenmode projections, and the propagator all act on.
template <class Scalar = double>
struct HpiState {
  int l_raw = 0;  // as requested
  int l = 0;      // reduced into [0, n_phi)
  int n_phi = 0;
  CVecX<Scalar> amplitudes;
  CVecX<Scalar> gauged;
  CVecX<Scalar> v, w;  // eigenmode projections; empty until project()

  bool projected() const { return v.size() > 0; }
  int size() const { return static_cast<int>(amplitudes.size()); }
};

template <class Scalar>
HpiState<Scalar> hpi_state(const AtomArray<Scalar>& array, int l) {
  using C = std::complex<Scalar>;
  const int n = array.size();
  HpiState<Scalar> st;
  st.l_raw = l;
  st.n_phi = array.n_phi;
  st.l = ((l % array.n_phi) + array.n_phi) % array.n_phi;
  st.gauged.resize(n);
  st.amplitudes.resize(n);
  const Scalar norm = Scalar(1) / std::sqrt(Scalar(n));
  for (int i = 0; i < n; ++i) {
    const Scalar helical =
        two_pi_v<Scalar> * Scalar(st.l) * Scalar(array.azimuth_index(i) - 1) / Scalar(array.n_phi);
    st.gauged(i) = std::exp(C(Scalar(0), helical)) * norm;
    st.amplitudes(i) = std::exp(C(Scalar(0), two_pi_v<Scalar> * array.positions(i, 2))) * st.gauged(i);
  }
  return st;
}

// v_m = <Phi_l|u_m>, w_m = (U^-1 Phi_l)_m in the gauged basis; the pair
// resolves h_l(t) = sum_m v_m e^{lambda_m t} w_m with completeness
// sum_m v_m w_m = h_l(0) = 1.
template <class Scalar>
HpiState<Scalar> project(HpiState<Scalar> state, const EigenSystem<Scalar>& sys) {
  if (sys.size() != state.size())
    throw ConfigError("eigensystem size does not match state size");
  if (sys.ill_conditioned)
    throw IllConditionedError(
        "eigenbasis condition number " + std::to_string(static_cast<double>(sys.condition_number)) +
        " exceeds 1e12; eigenmode projections are unreliable -- use propagate_oracle instead");
  state.v = sys.u.transpose() * state.gauged.conjugate();
  state.w = sys.u_inv * state.gauged;
  const std::complex<Scalar> total = (state.v.array() * state.w.array()).sum();
  if (std::abs(total - std::complex<Scalar>(1)) > Scalar(1e-9))
    throw ConsistencyError("mode completeness sum v_m w_m = " + std::to_string(total.real()) + " + " +
                           std::to_string(total.imag()) + "i deviates from 1");
  return state;
}

// Normalized modal weightings W_m = |v_m w_m|^2 / sum_m' |v_m' w_m'|^2.
template <class Scalar>
VecX<Scalar> weightings(const HpiState<Scalar>& state) {
  if (!state.projected())
    throw PhysicsError("weightings requested before project()");
  VecX<Scalar> w = (state.v.array() * state.w.array()).abs2().matrix();
  const Scalar total = w.sum();
  if (!(total > Scalar(0)))
    throw PhysicsError("all eigenmode projections vanish; no weightings to normalize");
  return w / total;
}

// 200 log-spaced times over [1e-3, 20]/Gamma.
template <class Scalar = double>
VecX<Scalar> default_time_grid(int n = 200, Scalar t_min = Scalar(1e-3), Scalar t_max = Scalar(20)) {
  if (n < 2 || !(t_min > Scalar(0)) || !(t_max > t_min))
    throw ConfigError("time grid requires n >= 2 and 0 < t_min < t_max");
  VecX<Scalar> t(n);
  const Scalar a = std::log(t_min), b = std::log(t_max);
  for (int i = 0; i < n; ++i) t(i) = std::exp(a + (b - a) * Scalar(i) / Scalar(n - 1));
  return t;
}

template <class Scalar = double>
struct DecayTrace {
  VecX<Scalar> times;
  CVecX<Scalar> h;          // survival amplitude h_l(t)
  VecX<Scalar> intensity;   // |h_l(t)|^2
};

template <class Scalar>
DecayTrace<Scalar> evolve(const HpiState<Scalar>& state, const EigenSystem<Scalar>& sys,
                          const VecX<Scalar>& times) {
  HpiState<Scalar> st = state.projected() ? state : project(state, sys);
  DecayTrace<Scalar> trace;
  trace.times = times;
  trace.h.resize(times.size());
  for (Eigen::Index k = 0; k < times.size(); ++k)
    trace.h(k) =
        (st.v.array() * (sys.lambdas.array() * times(k)).exp() * st.w.array()).sum();
  trace.intensity = trace.h.cwiseAbs2();
  return trace;
}

namespace detail {

// Dormand-Prince RK45 for y' = A y: fixed Butcher tableau, PI-free step
// control on the embedded 4th/5th-order error estimate.
template <class Scalar>
void rk45_linear(const CMatX<Scalar>& a_mat, CVecX<Scalar>& y, Scalar t0, Scalar t1, Scalar tol) {
  static constexpr double kA[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static constexpr double kC[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  // 5th-order solution weights equal kA[6]; embedded 4th-order weights:
  static constexpr double kB4[7] = {5179.0 / 57600, 0.0,          7571.0 / 16695, 393.0 / 640,
                                    -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

  const int n = static_cast<int>(y.size());
  Scalar t = t0;
  Scalar dt = std::min(Scalar(1e-3), t1 - t0);
  std::array<CVecX<Scalar>, 7> k;
  int rejected_in_a_row = 0;

  while (t < t1) {
    dt = std::min(dt, t1 - t);
    k[0] = a_mat * y;
    for (int s = 1; s < 7; ++s) {
      CVecX<Scalar> ys = y;
      for (int j = 0; j < s; ++j)
        if (kA[s][j] != 0.0) ys += (dt * Scalar(kA[s][j])) * k[j];
      k[s] = a_mat * ys;
    }
    // k[6] is A*y5 with y5 the 5th-order update (FSAL structure of DP).
    CVecX<Scalar> y5 = y;
    for (int j = 0; j < 6; ++j)
      if (kA[6][j] != 0.0) y5 += (dt * Scalar(kA[6][j])) * k[j];
    CVecX<Scalar> y4 = y;
    for (int j = 0; j < 7; ++j)
      if (kB4[j] != 0.0) y4 += (dt * Scalar(kB4[j])) * k[j];

    Scalar err = Scalar(0);
    for (int i = 0; i < n; ++i) {
      const Scalar scale = tol + tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err = std::max(err, std::abs(y5[i] - y4[i]) / scale);
    }
    if (err <= Scalar(1)) {
      t += dt;
      y = std::move(y5);
      rejected_in_a_row = 0;
    } else if (++rejected_in_a_row > 60) {
      throw PhysicsError("adaptive integrator failed to reach tolerance at t = " +
                         std::to_string(static_cast<double>(t)));
    }
    const Scalar grow = Scalar(0.9) * std::pow(std::max(err, Scalar(1e-10)), Scalar(-0.2));
    dt *= std::clamp(grow, Scalar(0.2), Scalar(5));
    if (!(dt > Scalar(0)))
      throw PhysicsError("adaptive integrator step size underflow");
  }
}

}  // namespace detail

// Independent check of evolve(): integrate dc/dt = M^T c from the gauged HPI
// amplitudes and overlap with the same state, bypassing the eigenbasis.
template <class Scalar>
DecayTrace<Scalar> propagate_oracle(const CouplingMatrix<Scalar>& cm, const HpiState<Scalar>& state,
                                    const VecX<Scalar>& times, Scalar tol = Scalar(1e-10)) {
  if (cm.m.rows() != state.size())
    throw ConfigError("coupling matrix size does not match state size");
  for (Eigen::Index k = 0; k + 1 < times.size(); ++k)
    if (!(times(k) < times(k + 1)))
      throw ConfigError("propagation time grid must be strictly increasing");
  if (times.size() > 0 && times(0) < Scalar(0))
    throw ConfigError("propagation times must be non-negative");

  const CMatX<Scalar> a_mat = cm.m.transpose();
  DecayTrace<Scalar> trace;
  trace.times = times;
  trace.h.resize(times.size());
  CVecX<Scalar> c = state.gauged;
  Scalar t = Scalar(0);
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    if (times(k) > t) {
      detail::rk45_linear(a_mat, c, t, times(k), tol);
      t = times(k);
    }
    trace.h(k) = state.gauged.dot(c);  // conjugates the bra
  }
  trace.intensity = trace.h.cwiseAbs2();
  return trace;
}

}  // namespace ringscatter
