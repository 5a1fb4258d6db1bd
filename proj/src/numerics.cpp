#include "pspin/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "pspin/errors.hpp"

namespace pspin::num {

Rule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw PreconditionError("quadrature needs at least one point");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double beta = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = beta;
    J(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  double half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    double v = es.eigenvectors()(0, i);
    r.x[i] = a + half * (es.eigenvalues()(i) + 1.0);
    r.w[i] = half * 2.0 * v * v;
  }
  return r;
}

namespace {

double moment_series(int n, int m, double x) {
  // sum_k C(n+k-1, k) x^k / (k+m+1)
  double term = 1.0, sum = 0.0;
  for (int k = 0; k < 200; ++k) {
    double c = term / (k + m + 1);
    sum += c;
    if (std::fabs(c) < 1e-18 * std::fabs(sum)) break;
    term *= x * (n + k) / (k + 1.0);
  }
  return sum;
}

}  // namespace

double cell_moment(int n, int m, double x) {
  if (!(x < 1.0)) throw DomainError("cell moment requires x < 1");
  if (n == 0) return 1.0 / (m + 1);
  if (std::fabs(x) < 0.1) return moment_series(n, m, x);
  if (m == 0) {
    switch (n) {
      case 1: return -std::log1p(-x) / x;
      case 2: return 1.0 / (1.0 - x);
      case 3: return (2.0 - x) / (2.0 * (1.0 - x) * (1.0 - x));
      default: break;
    }
    throw PreconditionError("cell moment order out of range");
  }
  return (cell_moment(n, m - 1, x) - cell_moment(n - 1, m - 1, x)) / x;
}

double log1p_ratio(double x) {
  if (std::fabs(x) < 1e-5) return 1.0 - x / 2.0 + x * x / 3.0;
  return std::log1p(x) / x;
}

double inv_linear_integral(double dphi, double c, double k) {
  if (!(c > 0.0)) throw DomainError("nonpositive denominator in log integral");
  double y = k * dphi / c;
  if (!(y > -1.0)) throw DomainError("denominator vanishes inside cell");
  return dphi / c * log1p_ratio(y);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mu = mean(v), s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return s / static_cast<double>(v.size() - 1);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double ks_normal(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  double n = static_cast<double>(sample.size()), d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double F = normal_cdf(sample[i]);
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0, na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  return d;
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double tol, int max_iter) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw InconsistentError("bisection bracket has no sign change");
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace pspin::num
