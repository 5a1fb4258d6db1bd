#include <doctest.h>

#include <cmath>
#include <random>

#include "pspin/chaos.hpp"
#include "pspin/errors.hpp"

using namespace pspin;

namespace {

Mixture frsb_example(double h = 0.0) { return Mixture({{2, std::sqrt(0.5)}, {4, std::sqrt(1.0 / 24.0)}}, h); }

ChaosContext context(const Mixture& m) { return build_context(m, minimize_Q(m)); }

}  // namespace

TEST_CASE("context quantities for RS SK h=1") {
  auto ctx = context(Mixture::sk(1.0));
  const double r = 1 / std::sqrt(2.0);
  CHECK(ctx.delta0 == doctest::Approx(r).epsilon(1e-10));
  CHECK(ctx.V0 == doctest::Approx(r).epsilon(1e-10));
  CHECK(ctx.B == doctest::Approx(r + std::sqrt(2.0)).epsilon(1e-10));
  CHECK(ctx.B - ctx.D(0.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("context quantities for FRSB and 1RSB") {
  auto m = frsb_example();
  auto ctx = context(m);
  CHECK(ctx.delta0 == doctest::Approx(1 / std::sqrt(m.xi(1.0, 2))).epsilon(1e-6));
  CHECK(ctx.B - ctx.D(0.0) == doctest::Approx(std::sqrt(m.xi(ctx.q0, 2))).epsilon(1e-6));

  // pure p=3 is odd, so the 1RSB formula is checked on p=4
  auto c3 = context(Mixture::pure(4));
  double z = one_rsb_z(4), delta = z / (1 + z);
  CHECK(c3.delta0 == doctest::Approx(std::sqrt(delta / z)).epsilon(1e-8));
  CHECK((c3.B - c3.D(0.0)) * c3.L0 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("D is bounded and nonincreasing") {
  for (auto m : {frsb_example(0.1), Mixture({{2, 0.3}, {4, 1.0}}, 0.3), Mixture::pure(4)}) {
    auto ctx = context(m);
    double prev = ctx.D(0.0);
    CHECK(prev < ctx.B);
    for (double q = 0.01; q < 1.0; q += 0.01) {
      double d = ctx.D(q);
      CHECK(d >= -1e-12);
      CHECK(d <= prev + 1e-12);
      prev = d;
    }
  }
}

TEST_CASE("odd mixtures are rejected") {
  auto m = Mixture({{3, 1.0}}, 0.5);
  CHECK_THROWS_AS(build_context(m, minimize_Q(m)), PreconditionError);
}

TEST_CASE("u_t for SK h=1 is 1/(2-t) and chi is 1/4") {
  auto ctx = context(Mixture::sk(1.0));
  for (double t : {0.1, 0.5, 0.9}) CHECK(solve_u_t(ctx, t) == doctest::Approx(1.0 / (2.0 - t)).epsilon(1e-10));
  CHECK(chi(ctx, 32) == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("u_t is zero without a field and inside (0, q0) with one") {
  auto ctx0 = context(frsb_example());
  for (double t : {0.2, 0.7}) CHECK(solve_u_t(ctx0, t) == 0.0);
  CHECK(chi(ctx0) == 0.0);

  auto ctx = context(frsb_example(0.1));
  auto prof = chaos_profile(ctx, {0.1, 0.3, 0.5, 0.7, 0.9}, 16);
  for (std::size_t i = 0; i < prof.u_t.size(); ++i) {
    CHECK(prof.u_t[i] > 0.0);
    CHECK(prof.u_t[i] < ctx.q0);
    CHECK(std::fabs(f_t(ctx, prof.t_grid[i], prof.u_t[i])) <= 1e-12);
    if (i) CHECK(prof.u_t[i] > prof.u_t[i - 1]);
  }
  CHECK(prof.chi > 0.0);
}

TEST_CASE("coupled functional identities") {
  auto m = frsb_example(0.1);
  auto sol = minimize_Q(m);
  auto ctx = build_context(m, sol);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    double t = U(rng), u = 2 * U(rng) - 1;
    double eps = eval_error_term(ctx, t, u);
    CHECK(eps >= -1e-12);
    CHECK(eval_E(ctx, t, u, 0.0) == doctest::Approx(2 * sol.gs - eps).epsilon(1e-10));
    if (std::fabs(u) <= ctx.q0) CHECK(std::fabs(eps) <= 1e-8);
  }
  for (double u : {-ctx.q0, 0.0, 0.5 * ctx.q0}) {
    const double e = 1e-5;
    double dE = (eval_E(ctx, 0.4, u, e) - eval_E(ctx, 0.4, u, -e)) / (2 * e);
    CHECK(dE == doctest::Approx(f_t(ctx, 0.4, u)).epsilon(1e-4).scale(1.0));
  }
  CHECK(eval_error_term(ctx, 0.5, 0.5 * (1 + ctx.q0)) > 1e-6);
}
