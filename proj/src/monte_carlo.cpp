#include "pspin/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <mutex>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include <Eigen/Dense>

#include "pspin/errors.hpp"
#include "pspin/numerics.hpp"

namespace pspin {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t tag, std::uint64_t sub) {
  key_ = mix64(mix64(mix64(seed + kGolden) ^ (tag * kGolden)) ^ (sub + 0x632be59bd9b4e019ULL));
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const { return mix64(key_ + (counter + 1) * kGolden); }

double CounterRng::uniform(std::uint64_t counter) const {
  return static_cast<double>((bits(counter) >> 11) + 1) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t index) const {
  std::uint64_t pair = index / 2;
  double r = std::sqrt(-2.0 * std::log(uniform(2 * pair)));
  double th = 2.0 * M_PI * uniform(2 * pair + 1);
  return index % 2 == 0 ? r * std::cos(th) : r * std::sin(th);
}

void CounterRng::normals(std::vector<double>& out) const {
  for (std::size_t i = 0; i + 1 < out.size(); i += 2) {
    double r = std::sqrt(-2.0 * std::log(uniform(i)));
    double th = 2.0 * M_PI * uniform(i + 1);
    out[i] = r * std::cos(th);
    out[i + 1] = r * std::sin(th);
  }
  if (out.size() % 2 == 1) out.back() = normal(out.size() - 1);
}

DisorderSample sample_disorder(const Mixture& m, int N, std::uint64_t seed, Stream tag, double cap) {
  if (N < 1) throw PreconditionError("N must be >= 1");
  double total = 0.0;
  for (auto [p, g] : m.gamma()) {
    total += std::pow(static_cast<double>(N), p);
    if (total > cap)
      throw ResourceError("disorder tensor for p=" + std::to_string(p) + " at N=" + std::to_string(N) +
                          " exceeds the scalar cap " + std::to_string(static_cast<long long>(cap)));
  }
  DisorderSample d;
  d.N = N;
  d.seed = seed;
  d.tag = static_cast<std::uint64_t>(tag);
  for (auto [p, g] : m.gamma()) {
    std::size_t size = 1;
    for (int k = 0; k < p; ++k) size *= static_cast<std::size_t>(N);
    std::vector<double> t(size);
    CounterRng(seed, d.tag, static_cast<std::uint64_t>(p)).normals(t);
    d.tensors.emplace(p, std::move(t));
  }
  return d;
}

namespace {

// X_p(sigma) without prefactor; adds coef * gradient into grad when grad != nullptr
double contract(const std::vector<double>& g, int N, int p, const double* s, double* grad, double coef) {
  double E = 0.0;
  if (p == 2) {
    for (int i = 0; i < N; ++i) {
      const double* row = g.data() + static_cast<std::size_t>(i) * N;
      double dot = 0.0;
      for (int j = 0; j < N; ++j) dot += row[j] * s[j];
      E += s[i] * dot;
      if (grad) {
        grad[i] += coef * dot;
        double si = coef * s[i];
        for (int j = 0; j < N; ++j) grad[j] += si * row[j];
      }
    }
    return E;
  }
  const int lead = p - 1;
  std::vector<int> idx(lead, 0);
  std::size_t rows = 1;
  for (int k = 0; k < lead; ++k) rows *= static_cast<std::size_t>(N);
  for (std::size_t r = 0; r < rows; ++r) {
    double pre = 1.0;
    for (int k = 0; k < lead; ++k) pre *= s[idx[k]];
    const double* row = g.data() + r * N;
    double dot = 0.0;
    for (int j = 0; j < N; ++j) dot += row[j] * s[j];
    E += pre * dot;
    if (grad) {
      double c = coef * pre;
      for (int j = 0; j < N; ++j) grad[j] += c * row[j];
      for (int k = 0; k < lead; ++k) {
        double others = 1.0;
        for (int l = 0; l < lead; ++l)
          if (l != k) others *= s[idx[l]];
        grad[idx[k]] += coef * others * dot;
      }
    }
    for (int k = lead - 1; k >= 0; --k) {
      if (++idx[k] < N) break;
      idx[k] = 0;
    }
  }
  return E;
}

}  // namespace

double Hamiltonian::energy_grad(const std::vector<double>& sigma, std::vector<double>& grad) const {
  const int n = N();
  grad.assign(n, mixture->h());
  double E = mixture->h() * std::accumulate(sigma.begin(), sigma.end(), 0.0);
  for (auto [w, d] : parts) {
    if (w == 0.0) continue;
    for (auto [p, gam] : mixture->gamma()) {
      double scale = w * gam * std::pow(static_cast<double>(n), -0.5 * (p - 1));
      E += scale * contract(d->tensors.at(p), n, p, sigma.data(), grad.data(), scale);
    }
  }
  return E;
}

double Hamiltonian::energy(const std::vector<double>& sigma) const {
  const int n = N();
  double E = mixture->h() * std::accumulate(sigma.begin(), sigma.end(), 0.0);
  for (auto [w, d] : parts) {
    if (w == 0.0) continue;
    for (auto [p, gam] : mixture->gamma()) {
      double scale = w * gam * std::pow(static_cast<double>(n), -0.5 * (p - 1));
      E += scale * contract(d->tensors.at(p), n, p, sigma.data(), nullptr, 0.0);
    }
  }
  return E;
}

namespace {

void check_sphere(const std::vector<double>& sigma, int N) {
  if (static_cast<int>(sigma.size()) != N) throw PreconditionError("sigma has the wrong length");
  double n2 = 0.0;
  for (double v : sigma) n2 += v * v;
  if (std::fabs(n2 / N - 1.0) > 1e-8) throw PreconditionError("sigma is not on the sphere of radius sqrt(N)");
}

void retract(std::vector<double>& s) {
  double n2 = 0.0;
  for (double v : s) n2 += v * v;
  double f = std::sqrt(static_cast<double>(s.size()) / n2);
  for (double& v : s) v *= f;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void tangent(const std::vector<double>& g, const std::vector<double>& s, std::vector<double>& tg) {
  double c = dot(g, s) / static_cast<double>(s.size());
  tg.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) tg[i] = g[i] - c * s[i];
}

}  // namespace

double eval_energy(const DisorderSample& d, const Mixture& m, const std::vector<double>& sigma) {
  check_sphere(sigma, d.N);
  Hamiltonian H{&m, {{1.0, &d}}};
  return H.energy(sigma);
}

GroundStateResult ground_state(const Hamiltonian& H, const AscentOptions& opt) {
  if (opt.restarts < 1) throw PreconditionError("restarts must be >= 1");
  const int N = H.N();
  const double sqrtN = std::sqrt(static_cast<double>(N));
  GroundStateResult best;
  best.energy = -std::numeric_limits<double>::infinity();
  best.restarts = opt.restarts;
  std::vector<double> s(N), g, tg, s_new, g_new, tg_new;
  for (int r = 0; r < opt.restarts; ++r) {
    CounterRng rng(opt.start_seed, static_cast<std::uint64_t>(Stream::Starts) + opt.start_stream,
                   static_cast<std::uint64_t>(r));
    rng.normals(s);
    retract(s);
    double E = H.energy_grad(s, g);
    tangent(g, s, tg);
    double gn = std::sqrt(dot(tg, tg));
    double eta = 0.1 * sqrtN / std::max(gn, 1e-300);
    int it = 0;
    for (; it < opt.max_iters && gn / sqrtN > opt.grad_tol; ++it) {
      double E_new = E;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        s_new = s;
        for (int i = 0; i < N; ++i) s_new[i] += eta * tg[i];
        retract(s_new);
        E_new = H.energy_grad(s_new, g_new);
        if (E_new >= E + 1e-4 * eta * gn * gn - 1e-14 * std::fabs(E)) {
          accepted = true;
          break;
        }
        eta *= 0.5;
      }
      if (!accepted) break;
      tangent(g_new, s_new, tg_new);
      // Barzilai-Borwein step from the change in position and tangent gradient
      double ss = 0.0, sy = 0.0;
      for (int i = 0; i < N; ++i) {
        double ds = s_new[i] - s[i], dy = tg_new[i] - tg[i];
        ss += ds * ds;
        sy += ds * dy;
      }
      s.swap(s_new);
      g.swap(g_new);
      tg.swap(tg_new);
      E = E_new;
      gn = std::sqrt(dot(tg, tg));
      double bb = sy != 0.0 ? ss / std::fabs(sy) : 2.0 * eta;
      eta = std::clamp(bb, 1e-8, 1e4);
    }
    if (E > best.energy) {
      best.energy = E;
      best.sigma = s;
      best.best_restart = r;
      best.grad_norm = gn / sqrtN;
      best.converged = gn / sqrtN <= opt.grad_tol;
      best.iterations = it;
    }
  }
  best.energy_per_site = best.energy / N;
  return best;
}

GroundStateResult ground_state(const DisorderSample& d, const Mixture& m, const AscentOptions& opt) {
  Hamiltonian H{&m, {{1.0, &d}}};
  return ground_state(H, opt);
}

double sk_eigen_oracle(const DisorderSample& d, const Mixture& m, double tol) {
  auto pd = m.pure_degree();
  if (!pd || *pd != 2 || m.h() != 0.0 || std::fabs(m.gamma(2) * m.gamma(2) - 0.5) > 1e-12)
    throw PreconditionError("sk_eigen_oracle requires the SK mixture gamma_2^2 = 1/2 with h = 0");
  const int N = d.N;
  const auto& G = d.tensors.at(2);
  Eigen::MatrixXd A(N, N);
  double c = m.gamma(2) / std::sqrt(static_cast<double>(N));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      A(i, j) = c * (G[static_cast<std::size_t>(i) * N + j] + G[static_cast<std::size_t>(j) * N + i]);
  // Gershgorin shift makes A + shift I positive semidefinite, so the dominant eigenvalue is the top one.
  // The power phase stops once the residual isolates the top eigenvalue; Rayleigh quotient iteration polishes.
  double shift = 0.0;
  for (int i = 0; i < N; ++i) shift = std::max(shift, A.row(i).cwiseAbs().sum());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(N) / std::sqrt(static_cast<double>(N));
  CounterRng rng(d.seed, 99, 0);
  for (int i = 0; i < N; ++i) v[i] += 0.1 * rng.normal(i);
  v.normalize();
  double rho = v.dot(A * v), res = 0.0;
  for (int it = 0; it < 1000000; ++it) {
    Eigen::VectorXd Av = A * v;
    rho = v.dot(Av);
    res = (Av - rho * v).norm();
    if (res <= 1e-4 * std::fabs(rho)) break;
    v = (Av + shift * v).normalized();
  }
  for (int it = 0; it < 50 && res > tol * std::fabs(rho); ++it) {
    Eigen::MatrixXd S = A;
    S.diagonal().array() -= rho;
    Eigen::VectorXd w = S.partialPivLu().solve(v);
    if (!w.allFinite()) break;
    v = w.normalized();
    Eigen::VectorXd Av = A * v;
    rho = v.dot(Av);
    res = (Av - rho * v).norm();
  }
  return 0.5 * N * rho;
}

namespace {

double sqrt_weight(double w) { return w <= 0.0 ? 0.0 : std::sqrt(w); }

template <class F>
void parallel_for(int n, int threads, F&& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex mu;
  for (int k = 0; k < threads; ++k)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace

CoupledResult coupled_ground_states(const Mixture& m, int N, double t, std::uint64_t seed,
                                    const AscentOptions& opt, double cap) {
  if (!m.is_even()) throw PreconditionError("coupled runs require an even mixture (odd gamma_p present)");
  if (!(t >= 0.0 && t <= 1.0)) throw PreconditionError("t must lie in [0,1]");
  auto X = sample_disorder(m, N, seed, Stream::Common, cap);
  DisorderSample X1, X2;
  double wc = sqrt_weight(t), wi = sqrt_weight(1.0 - t);
  Hamiltonian H1{&m, {{wc, &X}}}, H2{&m, {{wc, &X}}};
  if (wi > 0.0) {
    X1 = sample_disorder(m, N, seed, Stream::Independent1, cap);
    X2 = sample_disorder(m, N, seed, Stream::Independent2, cap);
    H1.parts.emplace_back(wi, &X1);
    H2.parts.emplace_back(wi, &X2);
  }
  AscentOptions o1 = opt, o2 = opt;
  o1.start_seed = o2.start_seed = seed;
  o1.start_stream = 0;
  o2.start_stream = t == 1.0 ? 0 : 1;
  auto r1 = ground_state(H1, o1);
  auto r2 = ground_state(H2, o2);
  CoupledResult out;
  out.raw_overlap = dot(r1.sigma, r2.sigma) / N;
  out.overlap = m.h() == 0.0 ? std::fabs(out.raw_overlap) : out.raw_overlap;
  out.L1 = r1.energy;
  out.L2 = r2.energy;
  out.converged = r1.converged && r2.converged;
  return out;
}

std::vector<std::uint64_t> seed_list(int n, std::uint64_t offset) {
  std::vector<std::uint64_t> s(n);
  for (int i = 0; i < n; ++i) s[i] = offset + static_cast<std::uint64_t>(i);
  return s;
}

std::vector<GroundStateResult> ground_state_runs(const Mixture& m, int N, const std::vector<std::uint64_t>& seeds,
                                                const McOptions& opt) {
  std::vector<GroundStateResult> out(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), opt.threads, [&](int i) {
    auto d = sample_disorder(m, N, seeds[i], Stream::Common, opt.cap);
    AscentOptions a = opt.ascent;
    a.start_seed = seeds[i];
    a.start_stream = 0;
    out[i] = ground_state(d, m, a);
  });
  return out;
}

std::vector<CoupledResult> coupled_runs(const Mixture& m, int N, double t, const std::vector<std::uint64_t>& seeds,
                                        const McOptions& opt) {
  std::vector<CoupledResult> out(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), opt.threads,
               [&](int i) { out[i] = coupled_ground_states(m, N, t, seeds[i], opt.ascent, opt.cap); });
  return out;
}

std::vector<double> ground_state_sample(const Mixture& m, int N, const std::vector<std::uint64_t>& seeds,
                                        const McOptions& opt) {
  std::vector<double> L;
  for (const auto& r : ground_state_runs(m, N, seeds, opt)) L.push_back(r.energy);
  return L;
}

VarianceIdentity variance_identity_check(const Mixture& m, int N, const std::vector<std::uint64_t>& seeds,
                                         int t_points, const McOptions& opt) {
  if (!m.is_even()) throw PreconditionError("variance identity requires an even mixture");
  const int n = static_cast<int>(seeds.size());
  if (n < 2) throw PreconditionError("variance identity needs at least two seeds");
  auto rule = num::gauss_legendre(t_points);
  VarianceIdentity out;
  out.t_nodes = rule.x;
  out.L_values = ground_state_sample(m, N, seeds, opt);
  // xiR[i][k] = xi(R) for seed i at node k
  std::vector<std::vector<double>> xiR(n, std::vector<double>(t_points));
  out.R.assign(n, std::vector<double>(t_points));
  parallel_for(n * t_points, opt.threads, [&](int job) {
    int i = job / t_points, k = job % t_points;
    auto c = coupled_ground_states(m, N, rule.x[k], seeds[i], opt.ascent, opt.cap);
    out.R[i][k] = c.raw_overlap;
    xiR[i][k] = m.xi(std::clamp(c.raw_overlap, -1.0, 1.0));
  });
  auto estimate = [&](int skip, double& vd, double& vi) {
    std::vector<double> L;
    for (int i = 0; i < n; ++i)
      if (i != skip) L.push_back(out.L_values[i]);
    vd = num::variance(L);
    vi = 0.0;
    for (int k = 0; k < t_points; ++k) {
      double s = 0.0;
      int cnt = 0;
      for (int i = 0; i < n; ++i)
        if (i != skip) {
          s += xiR[i][k];
          ++cnt;
        }
      vi += rule.w[k] * s / cnt;
    }
    vi *= N;
  };
  estimate(-1, out.var_direct, out.var_via_identity);
  for (int k = 0; k < t_points; ++k) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += xiR[i][k];
    out.mean_xi_R.push_back(s / n);
  }
  std::vector<double> jd(n), jv(n), jdiff(n);
  for (int i = 0; i < n; ++i) {
    estimate(i, jd[i], jv[i]);
    jdiff[i] = jd[i] - jv[i];
  }
  auto jk_se = [&](const std::vector<double>& v) {
    double mu = num::mean(v), s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt((n - 1.0) / n * s);
  };
  out.se_direct = jk_se(jd);
  out.se_identity = jk_se(jv);
  double se = jk_se(jdiff);
  out.z_score = se > 0.0 ? std::fabs(out.var_direct - out.var_via_identity) / se : 0.0;
  return out;
}

std::vector<SuperRow> superconcentration_trend(const Mixture& m, const std::vector<int>& N_list,
                                               const std::vector<std::uint64_t>& seeds, const McOptions& opt) {
  if (seeds.size() < 2) throw PreconditionError("superconcentration needs at least two seeds");
  std::vector<SuperRow> rows;
  for (int N : N_list) {
    rows.push_back(super_row(N, ground_state_sample(m, N, seeds, opt)));
  }
  return rows;
}

SuperRow super_row(int N, const std::vector<double>& L) {
  double v = num::variance(L) / N;
  return {N, v, v * std::sqrt(2.0 / (static_cast<double>(L.size()) - 1.0))};
}

bool trend_nonincreasing(const std::vector<SuperRow>& rows) {
  for (std::size_t k = 1; k < rows.size(); ++k) {
    double se = std::hypot(rows[k].stderr_, rows[k - 1].stderr_);
    if (rows[k].var_over_N > rows[k - 1].var_over_N + se) return false;
  }
  return true;
}

CltResult clt_check(const Mixture& m, int N, const std::vector<std::uint64_t>& seeds, double chi,
                    const McOptions& opt) {
  if (m.h() == 0.0) throw PreconditionError("CLT check requires h > 0 (chi = 0 at h = 0)");
  if (!m.is_even()) throw PreconditionError("CLT check requires an even mixture");
  if (!(chi > 0.0)) throw PreconditionError("CLT check requires chi > 0");
  if (seeds.size() < 2) throw PreconditionError("CLT check needs samples");
  auto L = ground_state_sample(m, N, seeds, opt);
  double mu = num::mean(L), scale = std::sqrt(chi * N);
  CltResult out;
  out.chi_used = chi;
  for (double x : L) out.W.push_back((x - mu) / scale);
  out.ks_distance = num::ks_normal(out.W);
  out.sd_W = std::sqrt(num::variance(out.W));
  out.ks_raw = num::ks_normal(L);
  out.L = std::move(L);
  return out;
}

}  // namespace pspin
