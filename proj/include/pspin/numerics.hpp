#pragma once

#include <functional>
#include <vector>

namespace pspin::num {

struct Rule {
  std::vector<double> x;
  std::vector<double> w;
};

// n-point Gauss-Legendre on [a, b] (Golub-Welsch)
Rule gauss_legendre(int n, double a = 0.0, double b = 1.0);

// K_{n,m}(x) = int_0^1 t^m (1 - x t)^{-n} dt for x < 1, n in 0..3
double cell_moment(int n, int m, double x);

// log1p(x)/x with the removable singularity at 0
double log1p_ratio(double x);

// int over [lo,hi] of phi'(q) / (c + k (phi(q) - phi(lo))) dq with dphi = phi(hi) - phi(lo) >= 0, c > 0
double inv_linear_integral(double dphi, double c, double k);

double mean(const std::vector<double>& v);
// unbiased sample variance
double variance(const std::vector<double>& v);

double normal_cdf(double z);
// sup |F_n - Phi|
double ks_normal(std::vector<double> sample);
// two-sample Kolmogorov-Smirnov statistic
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// bisection on [lo, hi] assuming f(lo), f(hi) have opposite signs; throws otherwise
double bisect(const std::function<double(double)>& f, double lo, double hi, double tol,
              int max_iter = 200);

}  // namespace pspin::num
