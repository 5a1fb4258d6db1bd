#include <doctest.h>

#include <cmath>
#include <random>

#include "pspin/errors.hpp"
#include "pspin/mixture.hpp"
#include "pspin/numerics.hpp"

using namespace pspin;

TEST_CASE("xi and its derivatives match the polynomial") {
  Mixture m({{2, 0.7}, {3, 0.4}, {5, 0.2}}, 0.3);
  auto ref = [](double s, int k) {
    double c[] = {0.49, 0.16, 0.04};
    int p[] = {2, 3, 5};
    double v = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (k > p[i]) continue;
      double f = c[i];
      for (int j = 0; j < k; ++j) f *= p[i] - j;
      v += f * std::pow(s, p[i] - k);
    }
    return v;
  };
  for (double s : {-0.9, -0.2, 0.0, 0.35, 1.0})
    for (int k = 0; k <= 3; ++k) CHECK(m.xi(s, k) == doctest::Approx(ref(s, k)).epsilon(1e-14));
  CHECK_FALSE(m.is_even());
  CHECK(m.max_degree() == 5);
  CHECK(m.h() == 0.3);
}

TEST_CASE("named mixtures") {
  CHECK(Mixture::sk().xi(1.0) == doctest::Approx(0.5));
  CHECK(Mixture::sk().is_even());
  for (int p : {2, 3, 4, 7}) {
    CHECK(Mixture::pure(p).xi(1.0) == doctest::Approx(1.0 / p));
    CHECK(Mixture::pure(p).pure_degree() == p);
  }
  CHECK_FALSE(Mixture({{2, 1.0}, {4, 1.0}}).pure_degree().has_value());
  CHECK(Mixture({{2, 1.0}, {3, 0.0}}).is_even());
}

TEST_CASE("invalid mixtures are rejected") {
  CHECK_THROWS_AS(Mixture({{1, 1.0}}), PreconditionError);
  CHECK_THROWS_AS(Mixture({{2, -0.1}}), PreconditionError);
  CHECK_THROWS_AS(Mixture({{2, 0.0}}), PreconditionError);
  CHECK_THROWS_AS(Mixture({{2, 1.0}}, -1.0), PreconditionError);
  CHECK_THROWS_AS(Mixture({{2, NAN}}), PreconditionError);
  CHECK_THROWS_AS(Mixture::sk().xi(1.5), PreconditionError);
  CHECK_THROWS_AS(Mixture::sk().xi(0.5, 4), PreconditionError);
}

TEST_CASE("xi is convex and increasing on [0,1] for random mixtures") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Mixture m({{2, U(rng)}, {3, U(rng)}, {4, U(rng)}});
    for (double s = 0.0; s <= 1.0; s += 0.05) {
      CHECK(m.xi(s, 1) >= 0.0);
      CHECK(m.xi(s, 2) >= 0.0);
    }
  }
}

TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
  for (int n : {2, 5, 16}) {
    auto r = num::gauss_legendre(n, 0.0, 2.0);
    for (int deg = 0; deg < 2 * n; ++deg) {
      double s = 0.0;
      for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * std::pow(r.x[i], deg);
      CHECK(s == doctest::Approx(std::pow(2.0, deg + 1) / (deg + 1)).epsilon(1e-12));
    }
  }
}

TEST_CASE("cell moments against direct quadrature") {
  auto r = num::gauss_legendre(60);
  for (int n = 0; n <= 3; ++n)
    for (int mm = 0; mm <= 3; ++mm)
      for (double x : {-2.0, -0.3, 0.0, 1e-9, 0.4, 0.8}) {
        double s = 0.0;
        for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * std::pow(r.x[i], mm) * std::pow(1.0 - x * r.x[i], -n);
        CHECK(num::cell_moment(n, mm, x) == doctest::Approx(s).epsilon(1e-11));
      }
}

TEST_CASE("statistics helpers") {
  CHECK(num::mean({1, 2, 3, 4}) == doctest::Approx(2.5));
  CHECK(num::variance({1, 2, 3, 4}) == doctest::Approx(5.0 / 3.0));
  CHECK(num::normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(num::normal_cdf(1.96) == doctest::Approx(0.9750021).epsilon(1e-6));
  CHECK(num::ks_normal({0.0}) == doctest::Approx(0.5));
  CHECK(num::ks_two_sample({1, 2, 3}, {1, 2, 3}) == doctest::Approx(0.0));
  CHECK(num::bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-14) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS(num::bisect([](double x) { return x * x + 1.0; }, 0.0, 2.0, 1e-14));
}
