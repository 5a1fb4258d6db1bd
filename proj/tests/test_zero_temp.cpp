#include <doctest.h>

#include <cmath>
#include <random>

#include "pspin/zero_temp.hpp"

using namespace pspin;

namespace {

Mixture frsb_example(double h = 0.0) { return Mixture({{2, std::sqrt(0.5)}, {4, std::sqrt(1.0 / 24.0)}}, h); }

OrderParamZeroT random_param(std::mt19937_64& rng, std::size_t M) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto q = OrderParamZeroT::uniform(M, 0.0);
  double a = 0.0;
  for (double& v : q.alpha) v = (a += 3.0 * U(rng) / M);
  q.L = q.mass() + 0.1 + U(rng);
  return q;
}

}  // namespace

TEST_CASE("order parameter bookkeeping") {
  auto p = OrderParamZeroT::uniform(4, 2.0);
  p.alpha = {0.0, 1.0, 1.0, 3.0};
  CHECK(p.mass() == doctest::Approx(1.25));
  CHECK(p.gap() == doctest::Approx(0.75));
  auto A = p.cumulative();
  CHECK(A.back() == doctest::Approx(1.25));
  CHECK(p.d_nodes().front() == doctest::Approx(2.0));
  CHECK(extract_q0(p) == doctest::Approx(0.25));
  CHECK(numerical_phase(p) == Phase::Other);
  p.alpha = {0.0, 0.0, 1.0, 1.0};
  CHECK(numerical_phase(p) == Phase::OneRSB);
  p.alpha = {0.0, 0.0, 0.0, 0.0};
  CHECK(numerical_phase(p) == Phase::RS);
  CHECK(extract_q0(p) == 1.0);
  p.alpha = {1.0, 0.5, 1.0, 1.0};
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.alpha = {0.0, 0.0, 0.0, 3.0};
  p.L = 0.7;
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("grad_Q agrees with central differences") {
  std::mt19937_64 rng(1);
  for (auto m : {Mixture::sk(0.7), frsb_example(0.2), Mixture({{2, 0.3}, {3, 0.5}, {6, 0.4}}, 0.0)}) {
    auto q = random_param(rng, 80);
    auto g = grad_Q(m, q);
    const double e = 1e-6;
    auto at = [&](auto mutate) {
      auto r = q;
      mutate(r);
      return eval_Q(m, r);
    };
    double fd = (at([&](auto& r) { r.L += e; }) - at([&](auto& r) { r.L -= e; })) / (2 * e);
    CHECK(g.dL == doctest::Approx(fd).epsilon(1e-6));
    for (std::size_t i : {0ul, 17ul, 79ul}) {
      double f = (at([&](auto& r) { r.alpha[i] += e; }) - at([&](auto& r) { r.alpha[i] -= e; })) / (2 * e);
      CHECK(g.dAlpha[i] == doctest::Approx(f).epsilon(1e-5).scale(1e-8));
    }
  }
}

TEST_CASE("closed forms are certified and match their formulas") {
  auto rs = closed_form_rs(Mixture::sk(1.0));
  CHECK(rs.gs == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(eval_Q(Mixture::sk(1.0), rs.param) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(rs.certificate.passes(Mixture::sk(1.0), 1e-8));

  auto m = frsb_example();
  auto fr = closed_form_frsb(m);
  CHECK(fr.certificate.passes(m, 1e-6));
  CHECK(eval_Q(m, fr.param) == doctest::Approx(fr.gs).epsilon(1e-6));

  for (int p : {3, 4, 6}) {
    double z = one_rsb_z(p);
    CHECK(std::fabs(one_rsb_residual(p, z)) <= 1e-12);
    auto one = closed_form_1rsb(p);
    CHECK(eval_Q(Mixture::pure(p), one.param) == doctest::Approx(one.gs).epsilon(1e-10));
  }
  CHECK_THROWS_AS(closed_form_rs(Mixture::pure(3)), PreconditionError);
  CHECK_THROWS_AS(closed_form_frsb(Mixture::sk(1.0)), PreconditionError);
  CHECK_THROWS_AS(one_rsb_z(2), PreconditionError);
}

TEST_CASE("phase classification") {
  CHECK(classify_phase(Mixture::sk(0.0)) == PhaseClass::RS);
  CHECK(classify_phase(Mixture::sk(1.0)) == PhaseClass::RS);
  CHECK(classify_phase(frsb_example()) == PhaseClass::FullRSB);
  CHECK(classify_phase(Mixture::pure(3)) == PhaseClass::OneRSBPure);
  CHECK(classify_phase(Mixture({{2, 0.3}, {4, 1.0}}, 0.3)) == PhaseClass::Other);
  double q0 = frsb_q0(frsb_example(0.1));
  auto m = frsb_example(0.1);
  CHECK(std::fabs(m.xi(q0, 1) + 0.01 - q0 * m.xi(q0, 2)) <= 1e-13);
}

TEST_CASE("minimize_Q reproduces the closed forms") {
  auto sk = minimize_Q(Mixture::sk(1.0));
  CHECK(sk.gs == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK(sk.phase == Phase::RS);
  auto m = frsb_example(0.1);
  auto fr = minimize_Q(m);
  CHECK(fr.gs == doctest::Approx(closed_form_frsb(m).gs).epsilon(1e-6));
  CHECK(fr.q0 == doctest::Approx(frsb_q0(m)).epsilon(2e-3));
  for (int p : {3, 4}) {
    auto s = minimize_Q(Mixture::pure(p));
    CHECK(s.gs == doctest::Approx(closed_form_1rsb(p).gs).epsilon(1e-8));
    CHECK(s.phase == Phase::OneRSB);
  }
}

TEST_CASE("GS is homogeneous of degree one in (gamma, h)") {
  Mixture m({{2, 0.4}, {3, 0.6}, {4, 0.3}}, 0.25);
  double lam = 1.7;
  Mixture scaled({{2, 0.4 * lam}, {3, 0.6 * lam}, {4, 0.3 * lam}}, 0.25 * lam);
  CHECK(minimize_Q(scaled).gs == doctest::Approx(lam * minimize_Q(m).gs).epsilon(1e-7));
}

TEST_CASE("GS increases with the field and in every gamma_p") {
  auto base = Mixture({{2, 0.5}, {4, 0.5}}, 0.2);
  auto s = minimize_Q(base);
  auto part = gs_partials(base, s);
  CHECK(part.d_h == doctest::Approx(0.2 * s.param.L));
  for (auto [p, d] : part.d_gamma) {
    CHECK(d > 0.0);
    double dg = 1e-4;
    double fd = (minimize_Q(base.with_gamma(p, 0.5 + dg)).gs - minimize_Q(base.with_gamma(p, 0.5 - dg)).gs) / (2 * dg);
    CHECK(d == doctest::Approx(fd).epsilon(1e-3));
  }
  CHECK(minimize_Q(base.with_field(0.4)).gs > s.gs);
}

TEST_CASE("certified minimizers of an Other mixture satisfy the q0 identity off grid") {
  Mixture m({{2, 0.3}, {4, 1.0}}, 0.3);
  for (std::size_t M : {997ul, 1000ul}) {
    SolverOptions o;
    o.grid_size = M;
    auto s = minimize_Q(m, o);
    CHECK(std::fabs(s.param.L * s.param.L * (m.xi(s.q0, 1) + 0.09) - s.q0) <= 1e-8);
    CHECK(s.q0 == doctest::Approx(0.0950911).epsilon(1e-5));
  }
}

TEST_CASE("solver preconditions and non-convergence") {
  SolverOptions o;
  o.grid_size = 10;
  CHECK_THROWS_AS(minimize_Q(Mixture::sk(1.0), o), PreconditionError);
  o = {};
  o.margin = 0.0;
  CHECK_THROWS_AS(minimize_Q(Mixture::sk(1.0), o), PreconditionError);
  o = {};
  o.tol = -1.0;
  CHECK_THROWS_AS(minimize_Q(Mixture::sk(1.0), o), PreconditionError);
  o = {};
  o.max_iters = 1;
  try {
    minimize_Q(frsb_example(), o);
    FAIL("expected NotConvergedError");
  } catch (const NotConvergedError& e) {
    CHECK(e.kind() == ErrorKind::NotConverged);
    CHECK(e.best().param.cells() == 1000);
    CHECK(e.best().param.gap() > 0.0);
  }
}
