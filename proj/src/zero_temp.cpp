#include "pspin/zero_temp.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pspin/numerics.hpp"

namespace pspin {

using num::cell_moment;

OrderParamZeroT OrderParamZeroT::uniform(std::size_t cells, double L) {
  if (cells < 1) throw PreconditionError("grid needs at least one cell");
  OrderParamZeroT p;
  p.grid.resize(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) p.grid[i] = static_cast<double>(i) / cells;
  p.grid.back() = 1.0;
  p.alpha.assign(cells, 0.0);
  p.L = L;
  return p;
}

std::vector<double> OrderParamZeroT::cumulative() const {
  std::vector<double> A(grid.size(), 0.0);
  for (std::size_t i = 0; i < alpha.size(); ++i) A[i + 1] = A[i] + alpha[i] * width(i);
  return A;
}

double OrderParamZeroT::mass() const { return cumulative().back(); }

std::vector<double> OrderParamZeroT::d_nodes() const {
  auto A = cumulative();
  for (double& a : A) a = L - a;
  return A;
}

void OrderParamZeroT::validate(double margin) const {
  if (!(margin > 0.0)) throw DomainError("feasibility margin must be positive");
  if (grid.size() < 2 || alpha.size() + 1 != grid.size())
    throw DomainError("grid and alpha sizes do not match");
  if (grid.front() != 0.0 || grid.back() != 1.0) throw DomainError("grid must span [0,1]");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i + 1] > grid[i])) throw DomainError("grid must be strictly increasing");
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (!std::isfinite(alpha[i]) || alpha[i] < 0.0) throw DomainError("alpha must be nonnegative");
    if (i > 0 && alpha[i] < alpha[i - 1]) throw DomainError("alpha must be nondecreasing");
  }
  if (!std::isfinite(L)) throw DomainError("L must be finite");
  if (!(gap() >= margin)) throw DomainError("feasibility margin violated: L - int alpha < margin");
}

namespace {

struct Sweep {
  std::vector<double> D;  // L - A(s_i)
  std::vector<double> J;  // int_0^{s_i} D^{-2}
};

Sweep sweep(const OrderParamZeroT& p) {
  Sweep s;
  s.D = p.d_nodes();
  s.J.assign(s.D.size(), 0.0);
  for (std::size_t i = 0; i < p.cells(); ++i) s.J[i + 1] = s.J[i] + p.width(i) / (s.D[i] * s.D[i + 1]);
  return s;
}

double cell_x(const OrderParamZeroT& p, const std::vector<double>& D, std::size_t i) {
  return p.alpha[i] * p.width(i) / D[i];
}

}  // namespace

double eval_Q(const Mixture& m, const OrderParamZeroT& p, double margin) {
  p.validate(margin);
  auto D = p.d_nodes();
  double c = m.xi(1.0, 1) + m.h() * m.h();
  double A1 = p.L - D.back();
  double I1 = m.xi(1.0, 1) * A1, I2 = 0.0;
  for (std::size_t i = 0; i < p.cells(); ++i) {
    double w = p.width(i);
    I1 -= p.alpha[i] * (m.xi(p.grid[i + 1]) - m.xi(p.grid[i]));
    I2 += w / D[i] * cell_moment(1, 0, cell_x(p, D, i));
  }
  return 0.5 * (c * p.L - I1 + I2);
}

GradQ grad_Q(const Mixture& m, const OrderParamZeroT& p, double margin) {
  p.validate(margin);
  auto sw = sweep(p);
  double c = m.xi(1.0, 1) + m.h() * m.h();
  double J1 = sw.J.back(), xi1 = m.xi(1.0, 1);
  GradQ g;
  g.dL = 0.5 * (c - J1);
  g.dAlpha.resize(p.cells());
  for (std::size_t j = 0; j < p.cells(); ++j) {
    double w = p.width(j), Dj = sw.D[j];
    double local = w * w / (Dj * Dj) * cell_moment(2, 1, cell_x(p, sw.D, j));
    double dxi = m.xi(p.grid[j + 1]) - m.xi(p.grid[j]);
    g.dAlpha[j] = 0.5 * (-(w * xi1 - dxi) + local + w * (J1 - sw.J[j + 1]));
  }
  return g;
}

std::vector<double> g_nodes(const Mixture& m, const OrderParamZeroT& p) {
  auto sw = sweep(p);
  std::size_t M = p.cells();
  // tail[k] = int_{s_k}^1 (1-q) D^{-2} dq
  std::vector<double> tail(M + 1, 0.0);
  for (std::size_t i = M; i-- > 0;) {
    double w = p.width(i), Di = sw.D[i];
    double cell = (1.0 - p.grid[i]) * w / (Di * sw.D[i + 1]) -
                  w * w / (Di * Di) * cell_moment(2, 1, cell_x(p, sw.D, i));
    tail[i] = tail[i + 1] + cell;
  }
  double h2 = m.h() * m.h(), xi1 = m.xi(1.0);
  std::vector<double> g(M + 1);
  for (std::size_t k = 0; k <= M; ++k) {
    double s = p.grid[k];
    g[k] = xi1 - m.xi(s) + h2 * (1.0 - s) - ((1.0 - s) * sw.J[k] + tail[k]);
  }
  g[M] = 0.0;
  return g;
}

Certificate certificate(const Mixture& m, const OrderParamZeroT& p, double margin) {
  p.validate(margin);
  auto sw = sweep(p);
  double c = m.xi(1.0, 1) + m.h() * m.h();
  Certificate cert;
  cert.eq_residual = std::fabs(c - sw.J.back());
  auto g = g_nodes(m, p);
  cert.min_g = *std::min_element(g.begin(), g.end());
  cert.g_samples.reserve(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) cert.g_samples.emplace_back(p.grid[k], g[k]);
  double num = 0.0, den = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < p.cells(); ++k) {
    double nu = p.alpha[k] - prev;
    prev = p.alpha[k];
    num += nu * g[k];
    den += nu;
  }
  cert.support_violation = den > 0.0 ? num / den : 0.0;
  return cert;
}

bool Certificate::passes(const Mixture& m, double tol) const {
  double c = m.xi(1.0, 1) + m.h() * m.h();
  return eq_residual <= tol * c && min_g >= -tol && std::fabs(support_violation) <= tol;
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::RS: return "RS";
    case Phase::OneRSB: return "OneRSB";
    case Phase::FullRSB: return "FullRSB";
    case Phase::Other: return "Other";
  }
  return "Other";
}

std::string to_string(PhaseClass p) {
  switch (p) {
    case PhaseClass::RS: return "RS";
    case PhaseClass::FullRSB: return "FullRSB";
    case PhaseClass::OneRSBPure: return "OneRSBPure";
    case PhaseClass::Other: return "Other";
  }
  return "Other";
}

namespace {

double support_floor(const std::vector<double>& a) {
  double amax = a.empty() ? 0.0 : *std::max_element(a.begin(), a.end());
  return std::max(1e-9, 1e-6 * amax);
}

}  // namespace

double extract_q0(const OrderParamZeroT& p) {
  double floor = support_floor(p.alpha);
  for (std::size_t i = 0; i < p.cells(); ++i)
    if (p.alpha[i] > floor) return p.grid[i];
  return 1.0;
}

Phase numerical_phase(const OrderParamZeroT& p) {
  double floor = support_floor(p.alpha), prev = 0.0;
  int atoms = 0;
  for (double a : p.alpha) {
    if (a - prev > floor) ++atoms;
    prev = a;
  }
  if (atoms == 0) return Phase::RS;
  if (atoms == 1) return Phase::OneRSB;
  if (atoms > 4) return Phase::FullRSB;
  return Phase::Other;
}

PhaseClass classify_phase(const Mixture& m) {
  double c = m.xi(1.0, 1) + m.h() * m.h();
  double xi2 = m.xi(1.0, 2);
  if (c >= xi2 * (1.0 - 1e-12)) return PhaseClass::RS;
  const int n = 1000;
  auto f = [&](int j) { return 1.0 / std::sqrt(m.xi(static_cast<double>(j) / n, 2)); };
  bool concave = true;
  for (int j = 2; j < n && concave; ++j)
    if (!(f(j - 1) - 2.0 * f(j) + f(j + 1) <= 1e-10)) concave = false;
  if (concave) return PhaseClass::FullRSB;
  auto pd = m.pure_degree();
  if (pd && *pd >= 3 && m.h() == 0.0) return PhaseClass::OneRSBPure;
  return PhaseClass::Other;
}

namespace {

ZeroTempSolution finish(const Mixture& m, OrderParamZeroT p, double gs) {
  ZeroTempSolution sol;
  sol.param = std::move(p);
  sol.gs = gs;
  sol.q0 = extract_q0(sol.param);
  sol.phase = numerical_phase(sol.param);
  sol.certificate = certificate(m, sol.param, std::min(kDefaultMargin, 0.5 * sol.param.gap()));
  return sol;
}

}  // namespace

ZeroTempSolution closed_form_rs(const Mixture& m, std::size_t grid_size) {
  if (classify_phase(m) != PhaseClass::RS)
    throw PreconditionError("closed_form_rs requires xi'(1) + h^2 >= xi''(1)");
  double c = m.xi(1.0, 1) + m.h() * m.h();
  return finish(m, OrderParamZeroT::uniform(grid_size, 1.0 / std::sqrt(c)), std::sqrt(c));
}

double frsb_q0(const Mixture& m, double tol) {
  double h2 = m.h() * m.h();
  auto phi = [&](double q) { return m.xi(q, 1) + h2 - q * m.xi(q, 2); };
  try {
    return num::bisect(phi, 0.0, 1.0, tol);
  } catch (const InconsistentError&) {
    throw InconsistentError("FRSB q0 equation has no sign change on [0,1]: phase misclassified");
  }
}

ZeroTempSolution closed_form_frsb(const Mixture& m, double tol, std::size_t grid_size) {
  if (classify_phase(m) != PhaseClass::FullRSB)
    throw PreconditionError("closed_form_frsb requires a FullRSB mixture");
  double q0 = frsb_q0(m, tol);
  auto p = OrderParamZeroT::uniform(grid_size, 0.0);
  auto it = std::lower_bound(p.grid.begin(), p.grid.end(), q0);
  if (q0 > 1e-12 && q0 < 1.0 - 1e-12 && *it - q0 > 1e-12 && q0 - *(it - 1) > 1e-12) p.grid.insert(it, q0);
  auto isq = [&](double s) { return 1.0 / std::sqrt(m.xi(s, 2)); };
  p.alpha.assign(p.grid.size() - 1, 0.0);
  for (std::size_t i = 0; i + 1 < p.grid.size(); ++i) {
    double a = p.grid[i], b = p.grid[i + 1];
    if (b > q0 + 1e-12) p.alpha[i] = (isq(a) - isq(b)) / (b - a);
  }
  // rounding can break monotonicity by an ulp
  for (std::size_t i = 1; i < p.alpha.size(); ++i) p.alpha[i] = std::max(p.alpha[i], p.alpha[i - 1]);
  p.L = isq(q0);
  double tail = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double q) { return std::sqrt(m.xi(q, 2)); }, q0, 1.0, 15, 1e-15);
  double gs = q0 * std::sqrt(m.xi(q0, 2)) + tail;
  return finish(m, std::move(p), gs);
}

double one_rsb_residual(int p, double z) {
  return ((1.0 + z) * std::log1p(z) - z) / (z * z) - 1.0 / p;
}

double one_rsb_z(int p) {
  if (p < 3) throw PreconditionError("closed_form_1rsb requires p >= 3");
  double lo = 1e-8, hi = 1e3;
  while (one_rsb_residual(p, hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 400 && hi - lo > 1e-15 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if (one_rsb_residual(p, mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

ZeroTempSolution closed_form_1rsb(int p, std::size_t grid_size) {
  double z = one_rsb_z(p);
  double delta = z / (1.0 + z);
  double a = std::sqrt(z * delta);
  auto param = OrderParamZeroT::uniform(grid_size, a + std::sqrt(delta / z));
  std::fill(param.alpha.begin(), param.alpha.end(), a);
  double gs = (1.0 + z / p) / std::sqrt(1.0 + z);
  return finish(Mixture::pure(p), std::move(param), gs);
}

GsPartials gs_partials(const Mixture& m, const ZeroTempSolution& sol) {
  const auto& p = sol.param;
  GsPartials out;
  out.d_h = m.h() * p.L;
  double gap = p.gap();
  for (auto [deg, g] : m.gamma()) {
    double moment = 0.0;
    for (std::size_t i = 0; i < p.cells(); ++i)
      moment += p.alpha[i] * (std::pow(p.grid[i + 1], deg) - std::pow(p.grid[i], deg)) / deg;
    out.d_gamma[deg] = deg * g * (gap + moment);
  }
  return out;
}

}  // namespace pspin
