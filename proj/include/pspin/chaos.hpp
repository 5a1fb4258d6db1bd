#pragma once

#include <vector>

#include "pspin/finite_temp.hpp"
#include "pspin/mixture.hpp"
#include "pspin/zero_temp.hpp"

namespace pspin {

struct ChaosContext {
  Mixture mixture;
  ZeroTempSolution sol;
  double L0 = 0.0;
  double q0 = 1.0;
  double delta0 = 0.0;  // L0 - int alpha0
  double V0 = 0.0;
  double V1 = 0.0;
  double B = 0.0;
  // 1/2 [h^2/(B - D(0)) + int xi''/(B - D) + B - V1], the value E(t,u,0)/2 reduces to
  double gs_dual = 0.0;
  std::vector<double> D_nodes;  // left-continuous branch: D(s_i) = V0 - int_0^{s_i} xi'' alpha0

  // D(1) = 0
  double D(double q) const;
  // D_u(q) for q in [0, |u|]
  double D_u(double t, double u, double q) const;
  // int_lo^hi xi''(q) / (K - r D(q)) dq, exact per grid cell
  double log_integral(double lo, double hi, double K, double r = 1.0) const;

 private:
  std::size_t cell_of(double q) const;
};

struct ChaosProfile {
  std::vector<double> t_grid;
  std::vector<double> u_t;
  double chi = 0.0;
};

// relative tolerance for B - D(0) = 1/L0
inline constexpr double kContextTol = 1e-6;

ChaosContext build_context(const Mixture& m, const ZeroTempSolution& sol);

double f_t(const ChaosContext& ctx, double t, double u);
double solve_u_t(const ChaosContext& ctx, double t, double tol = 1e-14);
double chi(const ChaosContext& ctx, int quad_points = 32);
ChaosProfile chaos_profile(const ChaosContext& ctx, const std::vector<double>& t_grid, int quad_points = 32);

double eval_E(const ChaosContext& ctx, double t, double u, double lambda);
double eval_error_term(const ChaosContext& ctx, double t, double u);

double eval_coupled_parisi(const Mixture& m, const FiniteTempOrder& o, double t, double u, double b,
                           double lambda);

}  // namespace pspin
