#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ringscatter/dynamics.hpp"

#include <cmath>
#include <complex>
#include <vector>

using namespace ringscatter;
using C = std::complex<double>;

namespace {

struct Prepared {
  AtomArray<double> array;
  CouplingMatrix<double> cm;
  EigenSystem<double> sys;
};

Prepared prepare(const RingSpec<double>& spec, Polarization pol) {
  Prepared p;
  p.array = build_array(spec);
  p.cm = build_matrix(p.array, make_field(p.array, pol));
  p.sys = eigendecompose(p.cm);
  return p;
}

double two_atom_f(double dist) {  // head-to-tail
  const double xi = 2.0 * std::numbers::pi * dist;
  return -3.0 * (std::cos(xi) / (xi * xi) - std::sin(xi) / (xi * xi * xi));
}

VecX<double> with_zero(const VecX<double>& t) {
  VecX<double> out(t.size() + 1);
  out(0) = 0.0;
  out.tail(t.size()) = t;
  return out;
}

}  // namespace

TEST_CASE("HPI amplitudes: N=2 examples and normalization") {
  const auto a = build_array(RingSpec<double>{.n_phi = 2, .r = 0.15});
  const double s = 1.0 / std::sqrt(2.0);
  const auto l1 = hpi_state(a, 1);
  CHECK(std::abs(l1.amplitudes(0) - C(s, 0)) < 1e-15);
  CHECK(std::abs(l1.amplitudes(1) - C(-s, 0)) < 1e-15);
  const auto l2 = hpi_state(a, 2);
  CHECK(l2.l == 0);
  CHECK(std::abs(l2.amplitudes(0) - C(s, 0)) < 1e-15);
  CHECK(std::abs(l2.amplitudes(1) - C(s, 0)) < 1e-15);

  const auto big = hpi_state(build_array(RingSpec<double>{.n_phi = 20, .r = 0.5}), 7);
  CHECK(big.amplitudes.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("winding reduces mod n_phi: l = 25 equals l = 5 on N = 20") {
  const auto a = build_array(RingSpec<double>{.n_phi = 20, .r = 0.5});
  const auto hi = hpi_state(a, 25);
  const auto lo = hpi_state(a, 5);
  CHECK(hi.l == 5);
  CHECK(hi.l_raw == 25);
  CHECK((hi.amplitudes - lo.amplitudes).norm() < 1e-14);
}

TEST_CASE("z_stack amplitudes carry the traveling phase, gauged ones do not") {
  const auto a = build_array(
      RingSpec<double>{.n_phi = 4, .r = 0.2, .stack = StackKind::z_stack, .n_z = 2, .d_z = 0.35});
  const auto st = hpi_state(a, 1);
  for (int i = 0; i < a.size(); ++i) {
    const C travel = std::exp(C(0, 2.0 * std::numbers::pi * a.positions(i, 2)));
    CHECK(std::abs(st.amplitudes(i) - travel * st.gauged(i)) < 1e-15);
  }
}

TEST_CASE("De Moivre orthogonality on a single ring") {
  const auto a = build_array(RingSpec<double>{.n_phi = 7, .r = 0.4});
  for (int l = 1; l <= 7; ++l)
    for (int lp = 1; lp <= 7; ++lp) {
      const C dot = hpi_state(a, l).amplitudes.dot(hpi_state(a, lp).amplitudes);
      CHECK(std::abs(dot - (l == lp ? C(1) : C(0))) < 1e-12);
    }
}

TEST_CASE("single atom: h(t) = e^{-t/2} along both paths") {
  const auto p = prepare(RingSpec<double>{.n_phi = 1, .r = 0.3}, Polarization::linear_x);
  const auto st = project(hpi_state(p.array, 0), p.sys);
  CHECK(std::abs(st.v(0) * st.w(0) - C(1)) < 1e-12);
  const auto times = with_zero(default_time_grid<double>());
  const auto eig = evolve(st, p.sys, times);
  const auto ode = propagate_oracle(p.cm, st, times);
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    CHECK(std::abs(eig.h(k) - std::exp(-times(k) / 2.0)) < 1e-12);
    CHECK(std::abs(ode.h(k) - eig.h(k)) < 1e-8);
  }
}

TEST_CASE("N=2: l=1 rides the subradiant mode, l=2 the superradiant one") {
  const auto p = prepare(RingSpec<double>{.n_phi = 2, .r = 0.15}, Polarization::linear_x);
  const double f = two_atom_f(0.3);
  const auto times = with_zero(default_time_grid<double>());

  const auto sub = evolve(hpi_state(p.array, 1), p.sys, times);
  for (Eigen::Index k = 0; k < times.size(); ++k)
    CHECK(std::abs(sub.intensity(k) - std::exp(-(1.0 - f) * times(k))) < 1e-10);

  const auto sup = evolve(hpi_state(p.array, 2), p.sys, times);
  for (Eigen::Index k = 0; k < times.size(); ++k)
    CHECK(std::abs(sup.intensity(k) - std::exp(-(1.0 + f) * times(k))) < 1e-10);

  // Weightings collapse onto single modes accordingly (mode 0 = slowest).
  const auto w1 = weightings(project(hpi_state(p.array, 1), p.sys));
  CHECK(w1(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w1(1) < 1e-12);
  const auto w2 = weightings(project(hpi_state(p.array, 2), p.sys));
  CHECK(w2(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("N=20 r=0.5 weightings concentrate on the modes of matching symmetry") {
  const auto p = prepare(RingSpec<double>{.n_phi = 20, .r = 0.5}, Polarization::linear_x);
  const std::vector<std::pair<int, int>> argmax_by_l = {{10, 0}, {9, 1}, {1, 18}, {2, 16}, {5, 7}};
  for (const auto& [l, mode] : argmax_by_l) {
    const auto w = weightings(project(hpi_state(p.array, l), p.sys));
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
    Eigen::Index got = -1;
    w.maxCoeff(&got);
    CHECK(got == mode);
  }
  // l = 10 is dominated by the single most subradiant mode...
  const auto w10 = weightings(project(hpi_state(p.array, 10), p.sys));
  CHECK(w10(0) > 0.5);
  // ...while l = 5 spreads over a handful of modes.
  const auto w5 = weightings(project(hpi_state(p.array, 5), p.sys));
  CHECK((w5.array() > 0.01).count() == 4);
}

TEST_CASE("completeness sum v_m w_m = 1 across the battery") {
  const std::vector<std::pair<RingSpec<double>, Polarization>> battery = {
      {{.n_phi = 20, .r = 0.5}, Polarization::linear_x},
      {{.n_phi = 20, .r = 0.5}, Polarization::radial},
      {{.n_phi = 20, .r = 0.5, .stack = StackKind::z_stack, .n_z = 2, .d_z = 0.35},
       Polarization::linear_x},
  };
  for (const auto& [spec, pol] : battery) {
    const auto p = prepare(spec, pol);
    for (const int l : {1, 5, 10}) {
      const auto st = project(hpi_state(p.array, l), p.sys);
      CHECK(std::abs((st.v.array() * st.w.array()).sum() - C(1)) < 1e-9);
    }
  }
}

TEST_CASE("h starts at 1 and stays inside the unit disk") {
  const auto p = prepare(RingSpec<double>{.n_phi = 20, .r = 0.5}, Polarization::linear_x);
  const auto times = with_zero(default_time_grid<double>());
  for (const int l : {1, 5, 9, 10}) {
    const auto trace = evolve(hpi_state(p.array, l), p.sys, times);
    CHECK(std::abs(trace.intensity(0) - 1.0) < 1e-9);
    for (Eigen::Index k = 0; k < times.size(); ++k) CHECK(std::abs(trace.h(k)) <= 1.0 + 1e-9);
  }
}

TEST_CASE("late-time survival: l = 10 outlives l = 1 by orders of magnitude") {
  const auto p = prepare(RingSpec<double>{.n_phi = 20, .r = 0.5}, Polarization::linear_x);
  VecX<double> t10(1);
  t10 << 10.0;
  const double slow = evolve(hpi_state(p.array, 10), p.sys, t10).intensity(0);
  const double fast = evolve(hpi_state(p.array, 1), p.sys, t10).intensity(0);
  CHECK(slow > 0.2);
  CHECK(slow < 0.27);
  CHECK(fast < 1e-5);
  CHECK(slow / fast > 1e4);
}

TEST_CASE("eigen path and adaptive propagator agree, including z stacks") {
  const std::vector<std::pair<RingSpec<double>, Polarization>> battery = {
      {{.n_phi = 2, .r = 0.15}, Polarization::linear_x},
      {{.n_phi = 20, .r = 0.5}, Polarization::circular_plus},
      {{.n_phi = 20, .r = 0.5, .stack = StackKind::z_stack, .n_z = 2, .d_z = 0.35},
       Polarization::linear_x},
  };
  const auto times = default_time_grid<double>();
  for (const auto& [spec, pol] : battery) {
    const auto p = prepare(spec, pol);
    for (const int l : {1, 9}) {
      const auto st = hpi_state(p.array, l);
      const auto eig = evolve(st, p.sys, times);
      const auto ode = propagate_oracle(p.cm, st, times);
      double dev = 0;
      for (Eigen::Index k = 0; k < times.size(); ++k)
        dev = std::max(dev, std::abs(eig.h(k) - ode.h(k)));
      CHECK(dev <= 1e-8);
    }
  }
}

TEST_CASE("projection refuses an ill-conditioned basis") {
  CouplingMatrix<double> cm;
  cm.m.resize(2, 2);
  cm.m << C(-0.5, 0), C(1, 0), C(1e-26, 0), C(-0.5, 0);
  const auto sys = eigendecompose(cm);
  REQUIRE(sys.ill_conditioned);
  AtomArray<double> fake = build_array(RingSpec<double>{.n_phi = 2, .r = 0.15});
  CHECK_THROWS_AS(project(hpi_state(fake, 1), sys), IllConditionedError);
}

TEST_CASE("default time grid is log-spaced over [1e-3, 20]") {
  const auto t = default_time_grid<double>();
  REQUIRE(t.size() == 200);
  CHECK(t(0) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(t(199) == doctest::Approx(20.0).epsilon(1e-12));
  const double ratio = t(1) / t(0);
  for (int k = 2; k < 200; ++k) CHECK(t(k) / t(k - 1) == doctest::Approx(ratio).epsilon(1e-9));
  CHECK_THROWS_AS(default_time_grid<double>(1), ConfigError);
  CHECK_THROWS_AS(default_time_grid<double>(10, -1.0, 5.0), ConfigError);
}

TEST_CASE("propagator rejects unsorted grids") {
  const auto p = prepare(RingSpec<double>{.n_phi = 2, .r = 0.15}, Polarization::linear_x);
  VecX<double> bad(3);
  bad << 0.0, 2.0, 1.0;
  CHECK_THROWS_AS(propagate_oracle(p.cm, hpi_state(p.array, 1), bad), ConfigError);
}
