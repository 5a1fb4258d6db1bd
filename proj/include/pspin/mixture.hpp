#pragma once

#include <map>
#include <optional>
#include <vector>

namespace pspin {

// Spherical mixed p-spin model: xi(s) = sum_p gamma_p^2 s^p, plus external field h.
// gamma_p is stored unsquared.
class Mixture {
 public:
  Mixture() = default;
  Mixture(std::map<int, double> gamma, double h = 0.0);

  static Mixture sk(double h = 0.0);
  // xi(s) = s^p / p
  static Mixture pure(int p, double h = 0.0);

  // order-th derivative of xi at s, |s| <= 1, order in 0..3
  double xi(double s, int order = 0) const;

  double h() const { return h_; }
  const std::map<int, double>& gamma() const { return gamma_; }
  double gamma(int p) const;
  bool is_even() const;
  int max_degree() const { return static_cast<int>(coef_.size()) - 1; }
  // degree p if exactly one gamma_p is positive
  std::optional<int> pure_degree() const;

  Mixture with_field(double h) const;
  Mixture with_gamma(int p, double g) const;

 private:
  std::map<int, double> gamma_;
  std::vector<double> coef_;  // coef_[p] = gamma_p^2
  double h_ = 0.0;
};

bool check_even(const Mixture& m);

}  // namespace pspin
