#include "pspin/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pspin/errors.hpp"
#include "pspin/numerics.hpp"

namespace pspin {

std::size_t ChaosContext::cell_of(double q) const {
  const auto& g = sol.param.grid;
  auto it = std::upper_bound(g.begin(), g.end(), q);
  std::size_t i = it == g.begin() ? 0 : static_cast<std::size_t>(it - g.begin()) - 1;
  return std::min(i, sol.param.cells() - 1);
}

double ChaosContext::D(double q) const {
  if (q >= 1.0) return 0.0;
  std::size_t i = cell_of(q);
  const auto& p = sol.param;
  return D_nodes[i] - p.alpha[i] * (mixture.xi(q, 1) - mixture.xi(p.grid[i], 1));
}

double ChaosContext::D_u(double t, double u, double q) const {
  double U = std::fabs(u), r = (1.0 - t) / (1.0 + t);
  if (q > U) throw PreconditionError("D_u is defined for q in [0, |u|]");
  double DU = D(U);
  if (q == U) return DU;
  return DU + r * (D(q) - DU);
}

double ChaosContext::log_integral(double lo, double hi, double K, double r) const {
  const auto& p = sol.param;
  double acc = 0.0;
  if (hi <= lo) return 0.0;
  for (std::size_t i = cell_of(lo); i < p.cells() && p.grid[i] < hi; ++i) {
    double a = std::max(p.grid[i], lo), b = std::min(p.grid[i + 1], hi);
    if (b <= a) continue;
    double base = K - r * D(a);
    acc += num::inv_linear_integral(mixture.xi(b, 1) - mixture.xi(a, 1), base, r * p.alpha[i]);
  }
  return acc;
}

ChaosContext build_context(const Mixture& m, const ZeroTempSolution& sol) {
  if (!m.is_even()) throw PreconditionError("chaos analysis requires an even mixture (odd gamma_p present)");
  ChaosContext c;
  c.mixture = m;
  c.sol = sol;
  const auto& p = sol.param;
  c.L0 = p.L;
  c.q0 = sol.q0;
  c.delta0 = p.gap();
  if (!(c.delta0 > 0.0)) throw InconsistentError("invariant delta0 > 0 failed");
  double xi2 = m.xi(1.0, 2), I0 = 0.0, I1 = 0.0;
  for (std::size_t i = 0; i < p.cells(); ++i) {
    double a = p.grid[i], b = p.grid[i + 1];
    I0 += p.alpha[i] * (m.xi(b, 1) - m.xi(a, 1));
    I1 += p.alpha[i] * ((b * m.xi(b, 1) - m.xi(b)) - (a * m.xi(a, 1) - m.xi(a)));
  }
  c.V0 = I0 + xi2 * c.delta0;
  c.V1 = I1 + xi2 * c.delta0;
  c.B = xi2 * c.delta0 + 1.0 / c.delta0;
  c.D_nodes.resize(p.grid.size());
  c.D_nodes[0] = c.V0;
  for (std::size_t i = 0; i < p.cells(); ++i)
    c.D_nodes[i + 1] = c.D_nodes[i] - p.alpha[i] * (m.xi(p.grid[i + 1], 1) - m.xi(p.grid[i], 1));

  double D0 = c.D_nodes[0];
  double Dmin = *std::min_element(c.D_nodes.begin(), c.D_nodes.end());
  if (Dmin < -1e-12 * std::max(1.0, D0)) throw InconsistentError("invariant 0 <= D(q) failed");
  if (!(D0 < c.B)) throw InconsistentError("invariant D(0) < B failed");
  double lhs = c.B - D0, rhs = 1.0 / c.L0;
  if (std::fabs(lhs - rhs) > kContextTol * rhs)
    throw InconsistentError("invariant B - D(0) = 1/L0 failed: residual " + std::to_string(lhs - rhs));
  double h2 = m.h() * m.h();
  c.gs_dual = 0.5 * (h2 / (c.B - D0) + c.log_integral(0.0, 1.0, c.B) + c.B - c.V1);
  return c;
}

double f_t(const ChaosContext& ctx, double t, double u) {
  if (!(t >= 0.0 && t <= 1.0)) throw PreconditionError("t must lie in [0,1]");
  const auto& m = ctx.mixture;
  return ctx.L0 * ctx.L0 * (t * m.xi(u, 1) + m.h() * m.h()) - u;
}

double solve_u_t(const ChaosContext& ctx, double t, double tol) {
  if (!(t > 0.0 && t < 1.0)) throw PreconditionError("solve_u_t requires 0 < t < 1");
  if (ctx.mixture.h() == 0.0) return 0.0;
  try {
    return num::bisect([&](double u) { return f_t(ctx, t, u); }, 0.0, ctx.q0, tol, 60);
  } catch (const InconsistentError&) {
    throw InconsistentError("f_t has no sign change on [0, q0] at t=" + std::to_string(t));
  }
}

double chi(const ChaosContext& ctx, int quad_points) {
  if (ctx.mixture.h() == 0.0) return 0.0;
  auto rule = num::gauss_legendre(quad_points);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.x.size(); ++i) acc += rule.w[i] * ctx.mixture.xi(solve_u_t(ctx, rule.x[i]));
  return acc;
}

ChaosProfile chaos_profile(const ChaosContext& ctx, const std::vector<double>& t_grid, int quad_points) {
  ChaosProfile prof;
  prof.t_grid = t_grid;
  for (double t : t_grid) prof.u_t.push_back(solve_u_t(ctx, t));
  prof.chi = chi(ctx, quad_points);
  return prof;
}

namespace {

void check_E_args(const ChaosContext& ctx, double t, double u) {
  if (!(t >= 0.0 && t <= 1.0)) throw PreconditionError("t must lie in [0,1]");
  if (!(std::fabs(u) <= 1.0)) throw PreconditionError("|u| must be <= 1");
  (void)ctx;
}

}  // namespace

double eval_E(const ChaosContext& ctx, double t, double u, double lambda) {
  check_E_args(ctx, t, u);
  double D0 = ctx.D(0.0), B = ctx.B;
  if (!(std::fabs(lambda) < B - D0)) throw PreconditionError("eval_E requires |lambda| < B - D(0)");
  double U = std::fabs(u), iota = u >= 0.0 ? 1.0 : -1.0, r = (1.0 - t) / (1.0 + t);
  double DU = ctx.D(U);
  double T = 0.5 * (1.0 + t) * ctx.log_integral(0.0, U, B - iota * lambda) +
             0.5 * (1.0 - t) * ctx.log_integral(0.0, U, B + iota * lambda - (1.0 - r) * DU, r) +
             0.5 * ctx.log_integral(U, 1.0, B - lambda) + 0.5 * ctx.log_integral(U, 1.0, B + lambda) -
             lambda * u + B - ctx.V1;
  double h2 = ctx.mixture.h() * ctx.mixture.h();
  double Dfield = u >= 0.0 ? D0 : ctx.D_u(t, u, 0.0);
  return T + h2 / (B - lambda - Dfield);
}

double eval_error_term(const ChaosContext& ctx, double t, double u) {
  check_E_args(ctx, t, u);
  static const num::Rule rule = num::gauss_legendre(8);
  const auto& p = ctx.sol.param;
  const auto& m = ctx.mixture;
  double U = std::fabs(u), B = ctx.B, acc = 0.0;
  for (std::size_t i = 0; i < p.cells() && p.grid[i] < U; ++i) {
    double a = p.grid[i], b = std::min(p.grid[i + 1], U), w = b - a;
    for (std::size_t k = 0; k < rule.x.size(); ++k) {
      double q = a + rule.x[k] * w;
      double Dq = ctx.D(q), Du = ctx.D_u(t, u, q);
      acc += rule.w[k] * w * m.xi(q, 2) * (Dq - Du) / ((B - Dq) * (B - Du));
    }
  }
  double e = 0.5 * (1.0 - t) * acc;
  if (u < 0.0) {
    double h2 = m.h() * m.h(), D0 = ctx.D(0.0), Du0 = ctx.D_u(t, u, 0.0);
    e += h2 * (D0 - Du0) / ((B - D0) * (B - Du0));
  }
  return e;
}

double eval_coupled_parisi(const Mixture& m, const FiniteTempOrder& o, double t, double u, double b,
                           double lambda) {
  o.validate();
  if (!(t >= 0.0 && t <= 1.0)) throw PreconditionError("t must lie in [0,1]");
  if (!(std::fabs(u) <= 1.0)) throw PreconditionError("|u| must be <= 1");
  double d0 = d_beta(m, o, 0.0);
  if (!(b > d0 + std::fabs(lambda))) throw PreconditionError("coupled bound requires b > d(0) + |lambda|");
  const double b2 = o.beta * o.beta, hb2 = b2 * m.h() * m.h();
  double U = std::fabs(u), iota = u >= 0.0 ? 1.0 : -1.0, r = (1.0 - t) / (1.0 + t);
  double dU = d_beta(m, o, U);
  double qterm = 0.0;
  for (const auto& sg : o.segments()) {
    auto prim = [&](double s) { return s * m.xi(s, 1) - m.xi(s); };
    qterm += sg.value * b2 * (prim(sg.b) - prim(sg.a));
  }
  double T = -0.5 * std::log1p(-(lambda / b) * (lambda / b)) +
             0.5 * (1.0 + t) * parisi_log_integral(m, o, 0.0, U, b - iota * lambda) +
             0.5 * (1.0 - t) * parisi_log_integral(m, o, 0.0, U, b + iota * lambda - (1.0 - r) * dU, r) +
             0.5 * parisi_log_integral(m, o, U, 1.0, b - lambda) +
             0.5 * parisi_log_integral(m, o, U, 1.0, b + lambda) - lambda * u + b - 1.0 - std::log(b) - qterm;
  double dfield = u >= 0.0 ? d0 : (1.0 - r) * dU + r * d0;
  return T + hb2 / (b - lambda - dfield);
}

}  // namespace pspin
