#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pspin/errors.hpp"
#include "pspin/mixture.hpp"

namespace pspin {

inline constexpr double kDefaultMargin = 1e-6;

// (L, alpha) with alpha a nondecreasing step function: alpha = a_i on [s_i, s_{i+1}).
struct OrderParamZeroT {
  std::vector<double> grid;   // 0 = s_0 < ... < s_M = 1
  std::vector<double> alpha;  // a_0 .. a_{M-1}
  double L = 0.0;

  static OrderParamZeroT uniform(std::size_t cells, double L);

  std::size_t cells() const { return alpha.size(); }
  double width(std::size_t i) const { return grid[i + 1] - grid[i]; }
  // A(s_i) = int_0^{s_i} alpha, exact, size M+1
  std::vector<double> cumulative() const;
  double mass() const;
  double gap() const { return L - mass(); }
  // nodes D_i = L - A(s_i)
  std::vector<double> d_nodes() const;
  // throws DomainError if the grid, monotonicity or the margin is violated
  void validate(double margin = kDefaultMargin) const;
};

struct Certificate {
  double min_g = 0.0;
  double eq_residual = 0.0;  // |xi'(1) + h^2 - int_0^1 (L - A)^{-2}|
  std::vector<std::pair<double, double>> g_samples;
  double support_violation = 0.0;

  // the three optimality conditions at relative/absolute tolerance tol
  bool passes(const Mixture& m, double tol) const;
};

enum class Phase { RS, OneRSB, FullRSB, Other };
enum class PhaseClass { RS, FullRSB, OneRSBPure, Other };

std::string to_string(Phase p);
std::string to_string(PhaseClass p);

struct ZeroTempSolution {
  OrderParamZeroT param;
  double gs = 0.0;
  double q0 = 1.0;
  Phase phase = Phase::RS;
  Certificate certificate;
  int iterations = 0;
};

struct SolverOptions {
  std::size_t grid_size = 1000;
  double tol = 1e-8;
  int max_iters = 500;
  double margin = kDefaultMargin;
};

class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, ZeroTempSolution best)
      : Error(ErrorKind::NotConverged, what), best_(std::move(best)) {}
  const ZeroTempSolution& best() const { return best_; }

 private:
  ZeroTempSolution best_;
};

struct GradQ {
  double dL = 0.0;
  std::vector<double> dAlpha;
};

struct GsPartials {
  double d_h = 0.0;
  std::map<int, double> d_gamma;
};

double eval_Q(const Mixture& m, const OrderParamZeroT& p, double margin = kDefaultMargin);
GradQ grad_Q(const Mixture& m, const OrderParamZeroT& p, double margin = kDefaultMargin);
// g(u) = int_u^1 gbar at every grid node, gbar(s) = xi'(s) + h^2 - int_0^s (L - A)^{-2}
std::vector<double> g_nodes(const Mixture& m, const OrderParamZeroT& p);
Certificate certificate(const Mixture& m, const OrderParamZeroT& p, double margin = kDefaultMargin);

ZeroTempSolution minimize_Q(const Mixture& m, const SolverOptions& opt = {});

PhaseClass classify_phase(const Mixture& m);
ZeroTempSolution closed_form_rs(const Mixture& m, std::size_t grid_size = 1000);
ZeroTempSolution closed_form_frsb(const Mixture& m, double tol = 1e-12, std::size_t grid_size = 1000);
ZeroTempSolution closed_form_1rsb(int p, std::size_t grid_size = 1000);
// root z of 1/p = (1+z)/z^2 log(1+z) - 1/z
double one_rsb_z(int p);
double one_rsb_residual(int p, double z);
// root of xi'(q) + h^2 - q xi''(q) on [0,1]
double frsb_q0(const Mixture& m, double tol = 1e-14);

GsPartials gs_partials(const Mixture& m, const ZeroTempSolution& sol);

// first node with alpha above the support floor, 1 if none
double extract_q0(const OrderParamZeroT& p);
Phase numerical_phase(const OrderParamZeroT& p);

}  // namespace pspin
