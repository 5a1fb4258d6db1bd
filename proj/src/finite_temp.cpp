#include "pspin/finite_temp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/tools/minima.hpp>
#include <gsl/gsl_multimin.h>

#include "pspin/errors.hpp"
#include "pspin/numerics.hpp"

namespace pspin {

void FiniteTempOrder::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw PreconditionError("beta must be positive");
  if (q.empty() || q.size() != x.size()) throw PreconditionError("order needs matching q and x atoms");
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(q[i] >= 0.0 && q[i] < 1.0)) throw PreconditionError("atom positions must lie in [0,1)");
    if (!(x[i] >= 0.0 && x[i] <= 1.0)) throw PreconditionError("atom values must lie in [0,1]");
    if (i > 0 && !(q[i] > q[i - 1])) throw PreconditionError("atom positions must be strictly increasing");
    if (i > 0 && !(x[i] > x[i - 1])) throw PreconditionError("atom values must be strictly increasing");
  }
  double qh = qhat();
  if (!(qh >= q.back() && qh < 1.0)) throw PreconditionError("q_hat must lie in [q_k, 1)");
  if (x.back() < 1.0 && !(qh > q.back())) throw PreconditionError("x must reach 1 at q_hat");
}

std::vector<FiniteTempOrder::Segment> FiniteTempOrder::segments() const {
  std::vector<Segment> s;
  if (q.front() > 0.0) s.push_back({0.0, q.front(), 0.0});
  for (std::size_t i = 0; i + 1 < q.size(); ++i) s.push_back({q[i], q[i + 1], x[i]});
  double qh = qhat();
  if (qh > q.back()) s.push_back({q.back(), qh, x.back()});
  s.push_back({qh, 1.0, 1.0});
  return s;
}

double FiniteTempOrder::x_hat(double t) const {
  double acc = 0.0;
  for (const auto& sg : segments())
    if (sg.b > t) acc += sg.value * (sg.b - std::max(sg.a, t));
  return acc;
}

double FiniteTempOrder::x_check(double t) const {
  double acc = 0.0;
  for (const auto& sg : segments())
    if (sg.a < t) acc += sg.value * (std::min(sg.b, t) - sg.a);
  return acc;
}

double FiniteTempOrder::operator()(double t) const {
  for (const auto& sg : segments())
    if (t >= sg.a && t < sg.b) return sg.value;
  return 1.0;
}

namespace {

// int_0^{q_hat} dq / xhat(q) with xhat(q) = total - xcheck(q); exact per segment
double inverse_xhat_integral(const FiniteTempOrder& o) {
  double qh = o.qhat(), total = o.x_check(1.0), acc = 0.0;
  double left = 0.0;  // xcheck at segment start
  for (const auto& sg : o.segments()) {
    if (sg.a >= qh) break;
    double b = std::min(sg.b, qh);
    double right = left + sg.value * (b - sg.a);
    double ha = total - left, hb = total - right;
    if (!(hb > 0.0)) throw DomainError("xhat vanishes before q_hat");
    acc += sg.value == 0.0 ? (b - sg.a) / ha : std::log(ha / hb) / sg.value;
    left = right;
  }
  return acc;
}

}  // namespace

double eval_CS(const Mixture& m, const FiniteTempOrder& o) {
  o.validate();
  const double b2 = o.beta * o.beta, hb2 = b2 * m.h() * m.h();
  double total = o.x_check(1.0);
  auto rule = num::gauss_legendre(std::max(2, m.max_degree()));
  double curv = 0.0, left = 0.0;
  for (const auto& sg : o.segments()) {
    double w = sg.b - sg.a;
    for (std::size_t k = 0; k < rule.x.size(); ++k) {
      double t = sg.a + rule.x[k] * w;
      curv += rule.w[k] * w * m.xi(t, 2) * (left + sg.value * (t - sg.a));
    }
    left += sg.value * w;
  }
  double value = (b2 * m.xi(1.0, 1) + hb2) * total - b2 * curv + inverse_xhat_integral(o) +
                 std::log1p(-o.qhat());
  return 0.5 * value;
}

double eval_CS_direct(const Mixture& m, const FiniteTempOrder& o) {
  o.validate();
  const double b2 = o.beta * o.beta, hb2 = b2 * m.h() * m.h();
  double lin = 0.0;
  for (const auto& sg : o.segments())
    lin += sg.value * (b2 * (m.xi(sg.b) - m.xi(sg.a)) + hb2 * (sg.b - sg.a));
  double inv = 0.0, qh = o.qhat();
  for (const auto& sg : o.segments()) {
    if (sg.a >= qh) break;
    double b = std::min(sg.b, qh);
    double ha = o.x_hat(sg.a), hb = o.x_hat(b);
    inv += sg.value == 0.0 ? (b - sg.a) / ha : std::log(ha / hb) / sg.value;
  }
  return 0.5 * (lin + inv + std::log1p(-qh));
}

double d_beta(const Mixture& m, const FiniteTempOrder& o, double s) {
  double b2 = o.beta * o.beta, acc = 0.0;
  for (const auto& sg : o.segments())
    if (sg.b > s) acc += sg.value * b2 * (m.xi(sg.b, 1) - m.xi(std::max(sg.a, s), 1));
  return acc;
}

double parisi_log_integral(const Mixture& m, const FiniteTempOrder& o, double lo, double hi, double K,
                           double r) {
  double b2 = o.beta * o.beta, acc = 0.0;
  for (const auto& sg : o.segments()) {
    double a = std::max(sg.a, lo), b = std::min(sg.b, hi);
    if (b <= a) continue;
    double base = K - r * d_beta(m, o, a);
    acc += num::inv_linear_integral(b2 * (m.xi(b, 1) - m.xi(a, 1)), base, r * sg.value);
  }
  return acc;
}

double eval_parisi_P(const Mixture& m, const FiniteTempOrder& o, double b) {
  o.validate();
  double d0 = d_beta(m, o, 0.0);
  if (!(b > std::max(1.0, d0))) throw PreconditionError("Parisi functional requires b > max(1, d(0))");
  const double b2 = o.beta * o.beta, hb2 = b2 * m.h() * m.h();
  double qterm = 0.0;
  for (const auto& sg : o.segments()) {
    auto prim = [&](double t) { return t * m.xi(t, 1) - m.xi(t); };
    qterm += sg.value * b2 * (prim(sg.b) - prim(sg.a));
  }
  double v = hb2 / (b - d0) + parisi_log_integral(m, o, 0.0, 1.0, b) + b - 1.0 - std::log(b) - qterm;
  return 0.5 * v;
}

ParisiMin minimize_parisi_b(const Mixture& m, const FiniteTempOrder& o) {
  double lo = std::max(1.0, d_beta(m, o, 0.0));
  auto f = [&](double b) { return eval_parisi_P(m, o, b); };
  double eps = 1e-12 * (1.0 + lo);
  double b1 = lo + 1.0, b2 = lo + 2.0;
  while (f(b2) <= f(b1)) {
    b1 = b2;
    b2 = lo + 2.0 * (b2 - lo);
  }
  auto r = boost::math::tools::brent_find_minima(f, lo + eps, b2, std::numeric_limits<double>::digits / 2);
  return {r.first, r.second};
}

namespace {

double sigmoid(double u) {
  u = std::clamp(u, -30.0, 30.0);
  return 1.0 / (1.0 + std::exp(-u));
}

double logit(double p) { return std::log(p / (1.0 - p)); }

FiniteTempOrder decode(const double* u, int k, double beta) {
  std::vector<double> qs(k), xs(k);
  for (int i = 0; i < k; ++i) qs[i] = sigmoid(u[i]);
  for (int i = 0; i + 1 < k; ++i) xs[i] = sigmoid(u[k + i]);
  xs[k - 1] = 1.0;
  std::sort(qs.begin(), qs.end());
  std::sort(xs.begin(), xs.end());
  FiniteTempOrder o;
  o.beta = beta;
  for (int i = 0; i < k; ++i) {
    if (!o.q.empty() && qs[i] <= o.q.back()) {
      o.x.back() = xs[i];
    } else if (!o.x.empty() && xs[i] <= o.x.back()) {
      continue;
    } else {
      o.q.push_back(qs[i]);
      o.x.push_back(xs[i]);
    }
  }
  return o;
}

struct NmContext {
  const Mixture* m;
  int k;
  double beta;
};

double nm_objective(const gsl_vector* v, void* params) {
  auto* c = static_cast<NmContext*>(params);
  try {
    return eval_CS(*c->m, decode(v->data, c->k, c->beta));
  } catch (const std::exception&) {
    return 1e300;
  }
}

std::vector<double> nelder_mead(NmContext& ctx, std::vector<double> start, double step, const KrsbOptions& opt,
                                double& best) {
  const std::size_t n = start.size();
  gsl_multimin_function fn{&nm_objective, n, &ctx};
  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* ss = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x, i, start[i]);
  gsl_vector_set_all(ss, step);
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &fn, x, ss);
  for (int it = 0; it < opt.max_iters; ++it) {
    if (gsl_multimin_fminimizer_iterate(s)) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), opt.tol) == GSL_SUCCESS) break;
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = gsl_vector_get(s->x, i);
  best = s->fval;
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(x);
  gsl_vector_free(ss);
  return out;
}

}  // namespace

FiniteTempOrder minimize_CS_krsb(const Mixture& m, double beta, int k, const KrsbOptions& opt) {
  if (k < 1) throw PreconditionError("k must be >= 1");
  if (!(beta > 0.0)) throw PreconditionError("beta must be positive");
  NmContext ctx{&m, k, beta};
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n = 2 * k - 1;
  std::vector<double> best_u;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, opt.restarts); ++r) {
    std::vector<double> qs(k), xs(k - 1);
    double qtop = std::max(0.05, 1.0 - 1.0 / beta);
    for (auto& v : qs) v = 0.02 + (qtop - 0.02) * unif(rng);
    double xtop = r % 2 == 0 ? std::min(0.9, 3.0 / beta) : 0.9;
    for (auto& v : xs) v = 0.01 + (xtop - 0.01) * unif(rng);
    std::vector<double> u(n);
    for (int i = 0; i < k; ++i) u[i] = logit(qs[i]);
    for (int i = 0; i + 1 < k; ++i) u[k + i] = logit(xs[i]);
    double val;
    auto sol = nelder_mead(ctx, u, 1.0, opt, val);
    sol = nelder_mead(ctx, sol, 0.1, opt, val);
    if (val < best) {
      best = val;
      best_u = sol;
    }
  }
  return decode(best_u.data(), k, beta);
}

std::vector<SweepRow> beta_sweep(const Mixture& m, const std::vector<double>& betas, int k,
                                 const KrsbOptions& opt) {
  for (std::size_t i = 1; i < betas.size(); ++i)
    if (!(betas[i] > betas[i - 1])) throw PreconditionError("betas must be increasing");
  std::vector<SweepRow> rows;
  const int ns = 20;
  for (double beta : betas) {
    SweepRow row;
    row.beta = beta;
    row.order = minimize_CS_krsb(m, beta, k, opt);
    row.F_over_beta = eval_CS(m, row.order) / beta;
    row.L_beta = beta * row.order.x_check(1.0);
    row.mass_below = beta * row.order.x_check(0.95);
    row.one_minus_qhat_scaled = beta * (1.0 - row.order.qhat());
    for (int j = 0; j < ns; ++j) {
      double s = 0.95 * j / (ns - 1);
      row.s_grid.push_back(s);
      row.scaled_x.push_back(beta * row.order(s));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace pspin
