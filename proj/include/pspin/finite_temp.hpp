#pragma once

#include <vector>

#include "pspin/mixture.hpp"

namespace pspin {

// Step distribution function: x = 0 on [0, q_1), x_i on [q_i, q_{i+1}),
// x_k on [q_k, q_hat), 1 on [q_hat, 1]. With x_k = 1 the default q_hat is q_k.
struct FiniteTempOrder {
  std::vector<double> q;
  std::vector<double> x;
  double beta = 1.0;
  double q_hat = -1.0;  // negative: use q_k

  struct Segment {
    double a, b, value;
  };

  double qhat() const { return q_hat < 0.0 ? q.back() : q_hat; }
  void validate() const;
  std::vector<Segment> segments() const;
  // int_q^1 x and int_0^q x
  double x_hat(double s) const;
  double x_check(double s) const;
  double operator()(double s) const;
};

// Q_beta via the integrated-by-parts form (xi_beta'' term by Gauss-Legendre)
double eval_CS(const Mixture& m, const FiniteTempOrder& o);
// Q_beta via the direct form, all terms in closed form
double eval_CS_direct(const Mixture& m, const FiniteTempOrder& o);

// d(q) = int_q^1 xi_beta'' x
double d_beta(const Mixture& m, const FiniteTempOrder& o, double s);
// int_lo^hi xi_beta''(q) / (K - r d(q)) dq, exact per segment
double parisi_log_integral(const Mixture& m, const FiniteTempOrder& o, double lo, double hi, double K,
                           double r = 1.0);

double eval_parisi_P(const Mixture& m, const FiniteTempOrder& o, double b);
struct ParisiMin {
  double b;
  double value;
};
ParisiMin minimize_parisi_b(const Mixture& m, const FiniteTempOrder& o);

struct KrsbOptions {
  int restarts = 12;
  double tol = 1e-10;
  int max_iters = 4000;
  unsigned long long seed = 20240611ULL;
};

FiniteTempOrder minimize_CS_krsb(const Mixture& m, double beta, int k, const KrsbOptions& opt = {});

struct SweepRow {
  double beta;
  double F_over_beta;
  double L_beta;                  // int_0^1 beta x
  double mass_below;              // int_0^{0.95} beta x
  double one_minus_qhat_scaled;   // beta (1 - q_hat)
  std::vector<double> s_grid;     // fixed grid on [0, 0.95]
  std::vector<double> scaled_x;   // beta x(s)
  FiniteTempOrder order;
};

std::vector<SweepRow> beta_sweep(const Mixture& m, const std::vector<double>& betas, int k,
                                 const KrsbOptions& opt = {});

}  // namespace pspin
