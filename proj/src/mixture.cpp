#include "pspin/mixture.hpp"

#include <cmath>
#include <string>

#include "pspin/errors.hpp"

namespace pspin {

Mixture::Mixture(std::map<int, double> gamma, double h) : h_(h) {
  if (!std::isfinite(h) || h < 0.0) throw PreconditionError("field h must be finite and >= 0");
  bool any = false;
  int pmax = 0;
  for (auto it = gamma.begin(); it != gamma.end();) {
    auto [p, g] = *it;
    if (p < 2) throw PreconditionError("mixture degree p=" + std::to_string(p) + " must be >= 2");
    if (!std::isfinite(g) || g < 0.0)
      throw PreconditionError("gamma_" + std::to_string(p) + " must be finite and >= 0");
    if (g == 0.0) {
      it = gamma.erase(it);
      continue;
    }
    any = true;
    pmax = std::max(pmax, p);
    ++it;
  }
  if (!any) throw PreconditionError("mixture needs at least one positive gamma_p");
  gamma_ = std::move(gamma);
  coef_.assign(pmax + 1, 0.0);
  for (auto [p, g] : gamma_) coef_[p] = g * g;
}

Mixture Mixture::sk(double h) { return Mixture({{2, std::sqrt(0.5)}}, h); }

Mixture Mixture::pure(int p, double h) { return Mixture({{p, std::sqrt(1.0 / p)}}, h); }

double Mixture::xi(double s, int order) const {
  if (order < 0 || order > 3) throw PreconditionError("xi derivative order must be in 0..3");
  if (!(std::fabs(s) <= 1.0)) throw PreconditionError("xi argument must satisfy |s| <= 1");
  if (coef_.empty()) throw PreconditionError("xi evaluated on an empty mixture");
  // Horner on the differentiated polynomial
  double acc = 0.0;
  for (int p = max_degree(); p >= order; --p) {
    double c = coef_[p];
    for (int j = 0; j < order; ++j) c *= (p - j);
    acc = acc * s + c;
  }
  return acc;
}

double Mixture::gamma(int p) const {
  auto it = gamma_.find(p);
  return it == gamma_.end() ? 0.0 : it->second;
}

bool Mixture::is_even() const {
  for (auto [p, g] : gamma_)
    if (p % 2 == 1 && g != 0.0) return false;
  return true;
}

std::optional<int> Mixture::pure_degree() const {
  if (gamma_.size() == 1) return gamma_.begin()->first;
  return std::nullopt;
}

Mixture Mixture::with_field(double h) const { return Mixture(gamma_, h); }

Mixture Mixture::with_gamma(int p, double g) const {
  auto gm = gamma_;
  gm[p] = g;
  return Mixture(gm, h_);
}

bool check_even(const Mixture& m) { return m.is_even(); }

}  // namespace pspin
