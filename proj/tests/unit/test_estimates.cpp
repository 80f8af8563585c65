#include <doctest.h>

#include <cmath>

#include "cgeig/error.hpp"
#include "cgeig/estimates.hpp"
#include "oracles.hpp"

using namespace cgeig;

TEST_CASE("chebyshev recurrence") {
  CHECK(chebyshev(0, 3.7) == 1.0);
  CHECK(chebyshev(1, 3.7) == 3.7);
  CHECK(chebyshev(3, 2.0) == 26.0);
  CHECK(chebyshev(10, 1.5) == doctest::Approx(oracle::chebyshev_cosh(10, 1.5)).epsilon(1e-10));
  for (int i = 0; i <= 50; ++i) {
    for (double phi = 1.0; phi <= 10.0; phi += 0.25) {
      const double ref = oracle::chebyshev_cosh(i, phi);
      CHECK(std::abs(chebyshev(i, phi) - ref) <= 1e-10 * std::abs(ref));
    }
  }
  CHECK_THROWS_AS(chebyshev(-1, 2.0), Error);
}

TEST_CASE("pcg bound") {
  const BoundInputs in{1.0, 2.0, 10.0, 0.0, 3.0};
  CHECK(pcg_bound(in, 0, 0.7, 1.3) == doctest::Approx(0.7 * 1.3));

  SUBCASE("identity preconditioner specialization") {
    // With T = M = I and sigma -> -inf, kappa (lambda2 - sigma)/(lambdan - sigma) -> 1.
    const double l1 = 1.0, l2 = 1.5, ln = 9.0;
    const double phi_special = 1.0 + 2.0 * (l2 - l1) / (ln - l2);
    const double e = (ln - l1) / (l2 - l1);
    CHECK((e + 1.0) / (e - 1.0) == doctest::Approx(phi_special).epsilon(1e-14));
    const double sigma = -1e9;
    const double kappa = (ln - sigma) / (l1 - sigma);
    const double eg = eta(BoundInputs{l1, l2, ln, sigma, kappa});
    CHECK((eg + 1.0) / (eg - 1.0) == doctest::Approx(phi_special).epsilon(1e-8));
  }
  SUBCASE("eta = 1 is one-step convergence") {
    const BoundInputs one{1.0, 2.0, 2.0, 0.0, 1.0};
    CHECK(eta(one) == doctest::Approx(1.0));
    CHECK(pcg_bound(one, 1, 1.0, 1.0) == 0.0);
  }
  SUBCASE("decreasing in i") {
    double prev = pcg_bound(in, 0, 1.0, 1.0);
    for (int i = 1; i < 30; ++i) {
      const double b = pcg_bound(in, i, 1.0, 1.0);
      CHECK(b < prev);
      prev = b;
    }
  }
  SUBCASE("invalid inputs") {
    CHECK_THROWS_AS(pcg_bound(BoundInputs{1.0, 2.0, 10.0, 0.0, 0.5}, 1, 1.0, 1.0), Error);
    CHECK_THROWS_AS(pcg_bound(BoundInputs{1.0, 2.0, 10.0, 1.0, 2.0}, 1, 1.0, 1.0), Error);
    CHECK_THROWS_AS(pcg_bound(BoundInputs{2.0, 1.0, 10.0, 0.0, 2.0}, 1, 1.0, 1.0), Error);
    try {
      eta(BoundInputs{1.0, 1.0, 3.0, 0.0, 1.0});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kClusterDegenerate);
    }
  }
}

TEST_CASE("psd factor") {
  const InteriorBoundInputs in{1.0, 2.0, 4.0, 0.0, 1.0};
  CHECK(eta(in) == doctest::Approx(1.5));
  CHECK(psd_factor(in) == doctest::Approx(0.04));
  CHECK(psd_factor(BoundInputs{1.0, 2.0, 4.0, 0.0, 1.0}) == doctest::Approx(0.04));
  CHECK(psd_factor(BoundInputs{1.0, 2.0, 2.0, 0.0, 1.0}) == doctest::Approx(0.0));
  double prev = 0.0;
  for (double kappa : {1.0, 10.0, 1e3, 1e6, 1e12}) {
    const double xi = psd_factor(InteriorBoundInputs{1.0, 2.0, 4.0, 0.0, kappa});
    CHECK(xi >= prev);
    CHECK(xi < 1.0);
    prev = xi;
  }
  CHECK(prev > 1.0 - 1e-11);
  CHECK_THROWS_AS(psd_factor(InteriorBoundInputs{2.0, 2.0, 4.0, 0.0, 1.0}), Error);
}

TEST_CASE("average factor and the psi identity") {
  CHECK(average_factor_psi2(1.0) == 0.0);
  CHECK(average_factor_psi2(9.0) == doctest::Approx(0.25));
  auto direct = [](double e, int m) {
    const double c = oracle::chebyshev_cosh(m, (e + 1.0) / (e - 1.0));
    return 1.0 / (c * c);
  };
  CHECK(std::abs(chebyshev_inverse_square_via_psi(4.0, 5) - direct(4.0, 5)) <= 1e-12 * direct(4.0, 5));
  for (double e : {1.01, 1.5, 4.0, 30.0, 1e3}) {
    for (int m = 0; m <= 30; ++m) {
      const double ref = direct(e, m);
      CHECK(std::abs(chebyshev_inverse_square_via_psi(e, m) - ref) <= 1e-10 * ref);
    }
  }
  CHECK_THROWS_AS(average_factor_psi2(0.5), Error);
}

TEST_CASE("asymptotic terms") {
  SUBCASE("stationary tail is skipped") {
    const std::vector<double> theta(6, 1.0);
    const std::vector<double> tilde(6, 1.0);
    CHECK(asymptotic_terms(theta, tilde, 1.0).empty());
  }
  SUBCASE("hand example") {
    // theta: 4, 2, 1.5 with PSD value 1.8 from the middle iterate, lambda1 = 1.
    const std::vector<double> theta{4.0, 2.0, 1.5};
    const std::vector<double> tilde{NAN, NAN, 1.8};
    const auto terms = asymptotic_terms(theta, tilde, 1.0);
    REQUIRE(terms.size() == 1);
    CHECK(terms[0].iter == 0);
    CHECK(*terms[0].delta1 == doctest::Approx(std::abs((1.0 / 2.0 + 1.0 / 0.5) * 0.2 - 1.0)));
    CHECK(*terms[0].delta2 == doctest::Approx(std::abs(1.0 / 2.0 + 0.5 / 0.5 - 0.8 / 0.2)));
    const double inv = 1.0 / std::sqrt(3.0) + 1.0 / std::sqrt(0.5) - 2.0 / std::sqrt(0.8);
    CHECK(*terms[0].delta3 == doctest::Approx(std::abs(1.0 / inv)));
  }
}
