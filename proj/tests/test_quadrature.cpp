#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ringscatter/quadrature.hpp"

#include <cmath>

using namespace ringscatter;

TEST_CASE("Gauss-Legendre n=2: nodes +-1/sqrt(3), unit weights") {
  const auto q = gauss_legendre<double>(2);
  const double x = 1.0 / std::sqrt(3.0);
  CHECK(q.nodes(0) == doctest::Approx(-x).epsilon(1e-15));
  CHECK(q.nodes(1) == doctest::Approx(x).epsilon(1e-15));
  CHECK(q.weights(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(q.weights(1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("Gauss-Legendre n=5 matches the reference table") {
  const auto q = gauss_legendre<double>(5);
  const double nodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                           0.9061798459386640};
  const double weights[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                             0.4786286704993665, 0.2369268850561891};
  for (int i = 0; i < 5; ++i) {
    CHECK(q.nodes(i) == doctest::Approx(nodes[i]).epsilon(1e-14));
    CHECK(q.weights(i) == doctest::Approx(weights[i]).epsilon(1e-14));
  }
}

TEST_CASE("weights sum to 2 and nodes ascend for a range of orders") {
  for (const int n : {1, 2, 3, 7, 16, 33, 96, 128}) {
    const auto q = gauss_legendre<double>(n);
    CHECK(q.weights.sum() == doctest::Approx(2.0).epsilon(1e-13));
    for (int i = 1; i < n; ++i) CHECK(q.nodes(i) > q.nodes(i - 1));
    CHECK(q.nodes(0) > -1.0);
    CHECK(q.nodes(n - 1) < 1.0);
  }
}

TEST_CASE("degree 2n-1 polynomials integrate exactly") {
  const auto q = gauss_legendre<double>(5);
  double x8 = 0, x9 = 0;
  for (int i = 0; i < 5; ++i) {
    x8 += q.weights(i) * std::pow(q.nodes(i), 8);
    x9 += q.weights(i) * std::pow(q.nodes(i), 9);
  }
  CHECK(x8 == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
  CHECK(std::abs(x9) < 1e-15);
}

TEST_CASE("sphere quadrature integrates 1 and cos^2(theta) exactly") {
  const auto q = sphere_quadrature<double>(24, 48);
  double total = 0, c2 = 0;
  for (Eigen::Index i = 0; i < q.theta.size(); ++i)
    for (Eigen::Index j = 0; j < q.phi.size(); ++j) {
      total += q.theta_weight(i) * q.phi_weight;
      const double c = std::cos(q.theta(i));
      c2 += q.theta_weight(i) * q.phi_weight * c * c;
    }
  CHECK(total == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-13));
  CHECK(c2 == doctest::Approx(4.0 * std::numbers::pi / 3.0).epsilon(1e-13));
}

TEST_CASE("smooth integrands converge spectrally under refinement") {
  auto integral = [](int n_theta, int n_phi) {
    const auto q = sphere_quadrature<double>(n_theta, n_phi);
    double acc = 0;
    for (Eigen::Index i = 0; i < q.theta.size(); ++i)
      for (Eigen::Index j = 0; j < q.phi.size(); ++j)
        acc += q.theta_weight(i) * q.phi_weight *
               std::exp(std::sin(q.theta(i)) * std::cos(q.phi(j)));
    return acc;
  };
  CHECK(std::abs(integral(64, 128) - integral(128, 256)) < 1e-10);
}

TEST_CASE("invalid orders are rejected") {
  CHECK_THROWS_AS(gauss_legendre<double>(0), ConfigError);
  CHECK_THROWS_AS(sphere_quadrature<double>(0, 8), ConfigError);
}
