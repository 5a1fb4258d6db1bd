// Minimization of the zero-temperature functional over the step-function cone.
//
// Works in the node values D_i = L - A(s_i), in which the functional is
//   f(D) = 1/2 [ h^2 D_0 + sum_i int_cell (xi'' D + 1/D) ]
// with D piecewise linear. Constraints (all linear in D):
//   s_0 = a_0 >= 0,  s_k = a_k - a_{k-1} >= 0,  s_M = D_M - margin >= 0.
// A log-barrier Newton path locates the active set; an active-set Newton
// iteration on the equality-constrained problem then gives exact zeros and
// pooled blocks, with multiplier signs checked at the end.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "pspin/numerics.hpp"
#include "pspin/zero_temp.hpp"

namespace pspin {

namespace {

using num::cell_moment;
using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

struct Row {
  int n = 0;
  int idx[3]{};
  double coef[3]{};
  double c0 = 0.0;
  double eval(const Vec& D) const {
    double s = c0;
    for (int j = 0; j < n; ++j) s += coef[j] * D[idx[j]];
    return s;
  }
};

class Problem {
 public:
  Problem(const Mixture& m, std::vector<double> grid, double margin)
      : grid_(std::move(grid)), M_(static_cast<int>(grid_.size()) - 1), margin_(margin) {
    h2_ = m.h() * m.h();
    w_.resize(M_);
    for (int i = 0; i < M_; ++i) w_[i] = grid_[i + 1] - grid_[i];
    // linear coefficients by Gauss-Legendre, exact for the polynomial xi''
    auto rule = num::gauss_legendre(std::max(2, m.max_degree()));
    lin_ = Vec::Zero(M_ + 1);
    lin_[0] += h2_;
    for (int i = 0; i < M_; ++i) {
      double cl = 0.0, cr = 0.0;
      for (std::size_t k = 0; k < rule.x.size(); ++k) {
        double tau = rule.x[k];
        double v = m.xi(grid_[i] + tau * w_[i], 2) * rule.w[k] * w_[i];
        cl += v * (1.0 - tau);
        cr += v * tau;
      }
      lin_[i] += cl;
      lin_[i + 1] += cr;
    }
    rows_.resize(M_ + 1);
    rows_[0] = Row{2, {0, 1, 0}, {1.0 / w_[0], -1.0 / w_[0], 0.0}, 0.0};
    for (int k = 1; k < M_; ++k)
      rows_[k] = Row{3, {k - 1, k, k + 1}, {-1.0 / w_[k - 1], 1.0 / w_[k] + 1.0 / w_[k - 1], -1.0 / w_[k]}, 0.0};
    rows_[M_] = Row{1, {M_, 0, 0}, {1.0, 0.0, 0.0}, -margin};
  }

  int M() const { return M_; }
  int n() const { return M_ + 1; }
  const Row& row(int k) const { return rows_[k]; }

  double value(const Vec& D) const {
    double f = lin_.dot(D);
    for (int i = 0; i < M_; ++i) {
      double u = D[i], v = D[i + 1];
      if (!(v > 0.0) || !(u > 0.0)) return std::numeric_limits<double>::infinity();
      double x = 1.0 - u / v;
      if (!(x < 1.0)) return std::numeric_limits<double>::infinity();
      f += w_[i] / v * cell_moment(1, 0, x);
    }
    return 0.5 * f;
  }

  void derivatives(const Vec& D, Vec& g, std::vector<Trip>& H) const {
    g = lin_;
    for (int i = 0; i < M_; ++i) {
      double u = D[i], v = D[i + 1];
      double x = 1.0 - u / v;
      double k20 = cell_moment(2, 0, x), k21 = cell_moment(2, 1, x);
      double k30 = cell_moment(3, 0, x), k31 = cell_moment(3, 1, x), k32 = cell_moment(3, 2, x);
      double a = w_[i] / (v * v), b = 2.0 * w_[i] / (v * v * v);
      g[i] -= a * k21;
      g[i + 1] -= a * (k20 - k21);
      double huu = b * k32, huv = b * (k31 - k32), hvv = b * (k30 - 2.0 * k31 + k32);
      H.emplace_back(i, i, 0.5 * huu);
      H.emplace_back(i, i + 1, 0.5 * huv);
      H.emplace_back(i + 1, i, 0.5 * huv);
      H.emplace_back(i + 1, i + 1, 0.5 * hvv);
    }
    g *= 0.5;
  }

  double slack(const Vec& D, int k) const { return rows_[k].eval(D); }
  double slack_dir(const Vec& d, int k) const { return rows_[k].eval(d) - rows_[k].c0; }

  // (L, a) from D with the working-set equalities imposed exactly
  OrderParamZeroT to_param(const Vec& D, const std::vector<char>& W) const {
    OrderParamZeroT p;
    p.grid = grid_;
    p.alpha.resize(M_);
    for (int i = 0; i < M_; ++i) p.alpha[i] = std::max(0.0, (D[i] - D[i + 1]) / w_[i]);
    int start = 0;
    while (start < M_) {
      int end = start + 1;
      while (end < M_ && W[end]) ++end;
      double mass = 0.0, width = 0.0;
      for (int i = start; i < end; ++i) {
        mass += p.alpha[i] * w_[i];
        width += w_[i];
      }
      double v = (start == 0 && W[0]) ? 0.0 : mass / width;
      for (int i = start; i < end; ++i) p.alpha[i] = v;
      start = end;
    }
    for (int i = 1; i < M_; ++i) p.alpha[i] = std::max(p.alpha[i], p.alpha[i - 1]);
    p.L = D[0];
    if (W[M_]) {
      double mass = 0.0;
      for (int i = 0; i < M_; ++i) mass += p.alpha[i] * w_[i];
      p.L = margin_ + mass;
    }
    return p;
  }

  Vec to_d(const OrderParamZeroT& p) const {
    Vec D(n());
    D[0] = p.L;
    for (int i = 0; i < M_; ++i) D[i + 1] = D[i] - p.alpha[i] * w_[i];
    return D;
  }

 private:
  std::vector<double> grid_;
  int M_;
  double margin_;
  double h2_ = 0.0;
  std::vector<double> w_;
  Vec lin_;
  std::vector<Row> rows_;
};

void barrier_path(const Problem& P, Vec& D, int& iters) {
  const int n = P.n(), ncon = P.M() + 1;
  Vec g, s(ncon), ds(ncon);
  std::vector<Trip> trips;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  bool analyzed = false;

  auto phi = [&](const Vec& X, double mu) {
    double f = P.value(X);
    for (int k = 0; k < ncon; ++k) {
      double sk = P.slack(X, k);
      if (!(sk > 0.0)) return std::numeric_limits<double>::infinity();
      f -= mu * std::log(sk);
    }
    return f;
  };

  for (double mu = 1e-3 / ncon; mu > 1e-12 / ncon; mu *= 0.1) {
    for (int inner = 0; inner < 60; ++inner) {
      trips.clear();
      P.derivatives(D, g, trips);
      for (int k = 0; k < ncon; ++k) {
        s[k] = P.slack(D, k);
        const Row& r = P.row(k);
        double inv = 1.0 / s[k];
        for (int a = 0; a < r.n; ++a) {
          g[r.idx[a]] -= mu * r.coef[a] * inv;
          for (int b = 0; b < r.n; ++b)
            trips.emplace_back(r.idx[a], r.idx[b], mu * r.coef[a] * r.coef[b] * inv * inv);
        }
      }
      SpMat H(n, n);
      H.setFromTriplets(trips.begin(), trips.end());
      if (!analyzed) {
        ldlt.analyzePattern(H);
        analyzed = true;
      }
      ldlt.factorize(H);
      // extreme conditioning near the end of the path: hand over to the active-set phase
      if (ldlt.info() != Eigen::Success) return;
      Vec step = ldlt.solve(-g);
      double dec = -g.dot(step);
      ++iters;
      if (dec < 1e-3 * mu) break;
      double tmax = 1.0;
      for (int k = 0; k < ncon; ++k) {
        ds[k] = P.slack_dir(step, k);
        if (ds[k] < 0.0) tmax = std::min(tmax, -0.99 * s[k] / ds[k]);
      }
      double t = tmax, f0 = phi(D, mu);
      Vec trial = D + t * step;
      while (phi(trial, mu) > f0 - 1e-4 * t * dec && t > 1e-12) {
        t *= 0.5;
        trial = D + t * step;
      }
      D = trial;
    }
  }
}

// returns true on a KKT point (all multipliers >= -ytol)
bool active_set(const Problem& P, Vec& D, std::vector<char>& W, int max_iters, int& iters) {
  const int n = P.n(), ncon = P.M() + 1;
  Vec g;
  std::vector<Trip> trips;
  const double ytol = 1e-13;
  D = P.to_d(P.to_param(D, W));
  for (int it = 0; it < max_iters; ++it) {
    ++iters;
    trips.clear();
    P.derivatives(D, g, trips);
    std::vector<int> act;
    for (int k = 0; k < ncon; ++k)
      if (W[k]) act.push_back(k);
    const int na = static_cast<int>(act.size());
    for (int r = 0; r < na; ++r) {
      const Row& row = P.row(act[r]);
      for (int a = 0; a < row.n; ++a) {
        trips.emplace_back(n + r, row.idx[a], row.coef[a]);
        trips.emplace_back(row.idx[a], n + r, row.coef[a]);
      }
    }
    SpMat K(n + na, n + na);
    K.setFromTriplets(trips.begin(), trips.end());
    Vec rhs = Vec::Zero(n + na);
    rhs.head(n) = -g;
    Eigen::SparseLU<SpMat> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success) throw InconsistentError("KKT system is singular");
    Vec sol = lu.solve(rhs);
    // the projected gradient is a small difference of large terms near the optimum; refine
    for (int r = 0; r < 3; ++r) sol += lu.solve(rhs - K * sol);
    Vec step = sol.head(n);
    double dec = -g.dot(step);
    double fscale = std::max(1.0, std::fabs(P.value(D)));
    if (dec <= 1e-22 * fscale) {
      int worst = -1;
      double ymin = -ytol;
      for (int r = 0; r < na; ++r) {
        double y = -sol[n + r];
        if (y < ymin) {
          ymin = y;
          worst = act[r];
        }
      }
      if (worst < 0) return true;
      W[worst] = 0;
      continue;
    }
    double tmax = std::numeric_limits<double>::infinity();
    int block = -1;
    for (int k = 0; k < ncon; ++k) {
      if (W[k]) continue;
      double dsk = P.slack_dir(step, k);
      if (dsk < 0.0) {
        double tk = -P.slack(D, k) / dsk;
        if (tk < tmax) {
          tmax = tk;
          block = k;
        }
      }
    }
    double t = 1.0;
    if (tmax <= 1.0) {
      t = std::max(0.0, tmax);
    } else if (dec > 1e-10 * fscale) {
      // below this decrement f cannot resolve the decrease; the problem is convex in D, so the
      // full Newton step is taken there
      block = -1;
      auto trial = [&](double tt) { return P.value(P.to_d(P.to_param(D + tt * step, W))); };
      double f0 = P.value(D);
      while (trial(t) > f0 - 1e-4 * t * dec && t > 1e-10) t *= 0.5;
    } else {
      block = -1;
    }
    D += t * step;
    if (block >= 0) W[block] = 1;
    D = P.to_d(P.to_param(D, W));
  }
  return false;
}

ZeroTempSolution package(const Mixture& m, OrderParamZeroT p, double margin, int iters) {
  ZeroTempSolution sol;
  sol.param = std::move(p);
  sol.gs = eval_Q(m, sol.param, margin);
  sol.q0 = extract_q0(sol.param);
  sol.phase = numerical_phase(sol.param);
  sol.certificate = certificate(m, sol.param, margin);
  sol.iterations = iters;
  return sol;
}

struct GridSolve {
  ZeroTempSolution sol;
  bool kkt = false;
};

GridSolve solve_on_grid(const Mixture& m, const std::vector<double>& grid, const SolverOptions& opt) {
  OrderParamZeroT start;
  start.grid = grid;
  start.alpha.assign(grid.size() - 1, 0.0);
  Problem P(m, start.grid, opt.margin);
  const int M = P.M();

  double c = m.xi(1.0, 1) + m.h() * m.h();
  start.L = 1.0 / std::sqrt(c);
  double eps = 1e-2 * start.L;
  for (int i = 0; i < M; ++i) start.alpha[i] = eps * (1.0 + start.grid[i]);
  if (start.gap() <= opt.margin) throw PreconditionError("margin too large for this mixture");
  Vec D = P.to_d(start);

  int iters = 0;
  barrier_path(P, D, iters);

  std::vector<char> W(M + 1, 0);
  {
    // constraints whose slack is small against the scale of the increments
    double scale = 0.0;
    for (int k = 0; k <= M; ++k) scale = std::max(scale, P.slack(D, k));
    for (int k = 0; k <= M; ++k) W[k] = P.slack(D, k) <= 1e-6 * scale;
  }
  GridSolve r;
  r.kkt = active_set(P, D, W, opt.max_iters, iters);
  r.sol = package(m, P.to_param(D, W), opt.margin, iters);
  return r;
}

// Stationarity in the location of the first atom: 1/(L - mass) - int alpha dxi' - 1/L, relative.
// On a fixed grid the atom sits on a node, and this is first order in its offset.
double atom_residual(const Mixture& m, const OrderParamZeroT& p) {
  double I0 = 0.0;
  for (std::size_t i = 0; i < p.cells(); ++i) I0 += p.alpha[i] * (m.xi(p.grid[i + 1], 1) - m.xi(p.grid[i], 1));
  return (1.0 / p.gap() - I0 - 1.0 / p.L) * p.L;
}

// uniform grid with node k moved onto q
std::vector<double> grid_through(std::size_t cells, std::size_t k, double q) {
  auto g = OrderParamZeroT::uniform(cells, 0.0).grid;
  g[k] = q;
  return g;
}

bool certified(const Mixture& m, const GridSolve& r, double tol) {
  return r.kkt && r.sol.certificate.passes(m, tol);
}

}  // namespace

ZeroTempSolution minimize_Q(const Mixture& m, const SolverOptions& opt) {
  if (opt.grid_size < 50) throw PreconditionError("grid_size must be >= 50");
  if (!(opt.tol > 0.0)) throw PreconditionError("tol must be positive");
  if (!(opt.margin > 0.0)) throw PreconditionError("margin must be positive");
  if (opt.max_iters < 1) throw PreconditionError("max_iters must be >= 1");

  const std::size_t M = opt.grid_size;
  auto best = solve_on_grid(m, OrderParamZeroT::uniform(M, 0.0).grid, opt);
  if (!certified(m, best, opt.tol))
    throw NotConvergedError("minimize_Q did not reach a certified minimizer", std::move(best.sol));

  // An isolated atom at q0 is pinned to a node. Move one node onto the root of the
  // stationarity residual so the atom sits where it should.
  const double w = 1.0 / static_cast<double>(M);
  double q0 = best.sol.q0, r0 = atom_residual(m, best.sol.param);
  if (q0 > 1.5 * w && q0 < 1.0 - 1.5 * w && std::fabs(r0) > 1e-8) {
    const auto k = static_cast<std::size_t>(std::lround(q0 / w));
    auto eval = [&](double q, GridSolve& out) {
      out = solve_on_grid(m, grid_through(M, k, q), opt);
      if (!certified(m, out, opt.tol)) return std::numeric_limits<double>::quiet_NaN();
      return atom_residual(m, out.sol.param);
    };
    // bracket: the residual falls as the atom moves up
    double a = q0, fa = r0, b = q0, fb = r0;
    GridSolve gb;
    bool bracketed = false;
    for (double step : {0.5, 0.95}) {
      b = q0 + (r0 > 0 ? 1.0 : -1.0) * step * w;
      fb = eval(b, gb);
      if (std::isnan(fb)) break;
      if ((fb > 0) != (fa > 0)) {
        bracketed = true;
        break;
      }
      a = b;
      fa = fb;
      if (std::fabs(fb) < std::fabs(r0)) {
        best = gb;
        r0 = fb;
      }
    }
    if (bracketed) {
      if (std::fabs(fb) < std::fabs(r0)) {
        best = gb;
        r0 = fb;
      }
      // Illinois regula falsi
      int side = 0;
      for (int it = 0; it < 40 && std::fabs(r0) > 1e-10 && std::fabs(b - a) > 1e-14; ++it) {
        double q = (a * fb - b * fa) / (fb - fa);
        GridSolve gq;
        double fq = eval(q, gq);
        if (std::isnan(fq)) break;
        if (std::fabs(fq) < std::fabs(r0)) {
          best = gq;
          r0 = fq;
        }
        if ((fq > 0) == (fb > 0)) {
          b = q;
          fb = fq;
          if (side == -1) fa *= 0.5;
          side = -1;
        } else {
          a = q;
          fa = fq;
          if (side == 1) fb *= 0.5;
          side = 1;
        }
      }
    }
  }
  return std::move(best.sol);
}

}  // namespace pspin
