#include <doctest.h>

#include <cmath>
#include <numeric>

#include "pspin/errors.hpp"
#include "pspin/monte_carlo.hpp"
#include "pspin/numerics.hpp"

using namespace pspin;

namespace {

std::vector<double> on_sphere(int N, std::uint64_t seed) {
  CounterRng r(seed, 99, 0);
  std::vector<double> s(N);
  r.normals(s);
  double n2 = std::inner_product(s.begin(), s.end(), s.begin(), 0.0);
  for (double& v : s) v *= std::sqrt(N / n2);
  return s;
}

double overlap(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0) / a.size();
}

}  // namespace

TEST_CASE("counter RNG is a pure function of its key and counter") {
  CounterRng a(5, 1, 0), b(5, 1, 0), c(5, 2, 0), d(6, 1, 0);
  CHECK(a.bits(17) == b.bits(17));
  CHECK(a.bits(17) != c.bits(17));
  CHECK(a.bits(17) != d.bits(17));
  CHECK(a.normal(1001) == b.normal(1001));
  std::vector<double> v(20000);
  a.normals(v);
  CHECK(v[1001] == a.normal(1001));
  double mu = num::mean(v), var = num::variance(v);
  CHECK(std::fabs(mu) <= 4.0 / std::sqrt(v.size()));
  CHECK(std::fabs(var - 1.0) <= 4.0 * std::sqrt(2.0 / v.size()));
  CHECK(num::ks_normal(v) <= 0.015);
  for (std::uint64_t i = 0; i < 1000; ++i) {
    double u = a.uniform(i);
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
}

TEST_CASE("disorder sampling: shapes, determinism, caps") {
  Mixture m({{2, 0.5}, {3, 0.5}});
  auto d = sample_disorder(m, 7, 3);
  CHECK(d.tensors.at(2).size() == 49);
  CHECK(d.tensors.at(3).size() == 343);
  CHECK(sample_disorder(m, 7, 3).tensors.at(3) == d.tensors.at(3));
  CHECK(sample_disorder(m, 7, 4).tensors.at(3) != d.tensors.at(3));
  CHECK_THROWS_AS(sample_disorder(Mixture::pure(4), 100, 1, Stream::Disorder, 1e6), ResourceError);
  try {
    sample_disorder(Mixture::pure(4), 100, 1, Stream::Disorder, 1e6);
  } catch (const ResourceError& e) {
    CHECK(std::string(e.what()).find("p=4") != std::string::npos);
  }
}

TEST_CASE("energy matches a direct tensor sum") {
  const int N = 5;
  Mixture m({{2, 0.8}, {3, 0.6}}, 0.3);
  auto d = sample_disorder(m, N, 11);
  auto s = on_sphere(N, 1);
  double direct = 0.3 * std::accumulate(s.begin(), s.end(), 0.0);
  const auto& g2 = d.tensors.at(2);
  const auto& g3 = d.tensors.at(3);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      direct += 0.8 / std::sqrt(N) * g2[i * N + j] * s[i] * s[j];
      for (int k = 0; k < N; ++k) direct += 0.6 / N * g3[(i * N + j) * N + k] * s[i] * s[j] * s[k];
    }
  CHECK(eval_energy(d, m, s) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("Euclidean gradient matches finite differences") {
  const int N = 6;
  Mixture m({{2, 0.5}, {3, 0.4}, {4, 0.3}}, 0.2);
  auto d = sample_disorder(m, N, 2);
  Hamiltonian H{&m, {{1.0, &d}}};
  auto s = on_sphere(N, 3);
  std::vector<double> g;
  double E = H.energy_grad(s, g);
  CHECK(E == doctest::Approx(H.energy(s)).epsilon(1e-13));
  for (int i = 0; i < N; ++i) {
    auto up = s, dn = s;
    up[i] += 1e-6;
    dn[i] -= 1e-6;
    CHECK(g[i] == doctest::Approx((H.energy(up) - H.energy(dn)) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("covariance of the Hamiltonian is N xi(R)") {
  const int N = 4, samples = 4000;
  Mixture m({{2, 0.7}, {3, 0.5}});
  auto a = on_sphere(N, 10), b = on_sphere(N, 20);
  double R = overlap(a, b);
  std::vector<double> prod(samples), sq(samples);
  for (int k = 0; k < samples; ++k) {
    auto d = sample_disorder(m, N, 1000 + k);
    double ea = eval_energy(d, m, a), eb = eval_energy(d, m, b);
    prod[k] = ea * eb / N;
    sq[k] = ea * ea / N;
  }
  auto within = [&](const std::vector<double>& v, double target) {
    return std::fabs(num::mean(v) - target) <= 4.0 * std::sqrt(num::variance(v) / samples);
  };
  CHECK(within(prod, m.xi(R)));
  CHECK(within(sq, m.xi(1.0)));
}

TEST_CASE("p=2 ascent reaches the top eigenvalue and stays on the sphere") {
  auto m = Mixture::sk(0.0);
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto d = sample_disorder(m, 80, seed);
    AscentOptions o;
    o.restarts = 1;
    auto r = ground_state(d, m, o);
    CHECK(r.energy == doctest::Approx(sk_eigen_oracle(d, m)).epsilon(1e-10));
    CHECK(std::inner_product(r.sigma.begin(), r.sigma.end(), r.sigma.begin(), 0.0) == doctest::Approx(80.0));
    CHECK(r.converged);
    CHECK(r.energy_per_site == doctest::Approx(r.energy / 80));
  }
}

TEST_CASE("more restarts never lower the best energy") {
  Mixture m({{3, 1.0}}, 0.0);
  auto d = sample_disorder(m, 25, 4);
  AscentOptions o;
  double prev = -1e300;
  for (int r : {1, 2, 4, 8}) {
    o.restarts = r;
    double e = ground_state(d, m, o).energy;
    CHECK(e >= prev - 1e-12);
    prev = e;
  }
  o.restarts = 0;
  CHECK_THROWS_AS(ground_state(d, m, o), PreconditionError);
}

TEST_CASE("coupled systems at t=1 coincide") {
  auto r = coupled_ground_states(Mixture::sk(0.0), 40, 1.0, 7, AscentOptions{});
  CHECK(r.overlap == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.L1 == doctest::Approx(r.L2).epsilon(1e-10));
  auto h = coupled_ground_states(Mixture::sk(0.5), 40, 0.3, 7, AscentOptions{});
  CHECK(h.overlap == h.raw_overlap);
  CHECK(std::fabs(h.overlap) <= 1.0 + 1e-12);
}

TEST_CASE("runs are identical for any thread count") {
  auto m = Mixture({{2, 0.7}, {4, 0.5}}, 0.2);
  auto seeds = seed_list(6, 3);
  CHECK(seeds.front() == 3);
  CHECK(seeds.back() == 8);
  McOptions one, many;
  many.threads = 4;
  auto a = ground_state_runs(m, 20, seeds, one), b = ground_state_runs(m, 20, seeds, many);
  for (std::size_t i = 0; i < seeds.size(); ++i) CHECK(a[i].energy == b[i].energy);
  auto ca = coupled_runs(m, 20, 0.5, seeds, one), cb = coupled_runs(m, 20, 0.5, seeds, many);
  for (std::size_t i = 0; i < seeds.size(); ++i) CHECK(ca[i].overlap == cb[i].overlap);
}

TEST_CASE("superconcentration rows and the trend rule") {
  auto row = super_row(50, {1.0, 2.0, 3.0, 4.0});
  CHECK(row.var_over_N == doctest::Approx(num::variance({1, 2, 3, 4}) / 50));
  CHECK(row.stderr_ == doctest::Approx(row.var_over_N * std::sqrt(2.0 / 3.0)));
  CHECK(trend_nonincreasing({{50, 1.0, 0.1}, {100, 0.8, 0.1}, {200, 0.85, 0.1}}));
  CHECK_FALSE(trend_nonincreasing({{50, 1.0, 0.1}, {100, 1.5, 0.1}}));
}

TEST_CASE("CLT preconditions") {
  auto seeds = seed_list(10, 0);
  CHECK_THROWS_AS(clt_check(Mixture::sk(0.0), 30, seeds, 0.1, {}), PreconditionError);
  CHECK_THROWS_AS(clt_check(Mixture::pure(3, 1.0), 30, seeds, 0.1, {}), PreconditionError);
  CHECK_THROWS_AS(clt_check(Mixture::sk(1.0), 30, seeds, 0.0, {}), PreconditionError);
  auto r = clt_check(Mixture::sk(1.0), 30, seeds, 0.25, {});
  CHECK(r.W.size() == 10);
  CHECK(std::fabs(num::mean(r.W)) <= 1e-12);
}
