#include "pspin/pspin.h"

#include <cstring>
#include <map>
#include <memory>
#include <string>

#include "pspin/chaos.hpp"
#include "pspin/errors.hpp"
#include "pspin/finite_temp.hpp"
#include "pspin/monte_carlo.hpp"
#include "pspin/runner.hpp"
#include "pspin/zero_temp.hpp"

struct pspin_mixture {
  pspin::Mixture m;
};
struct pspin_solution {
  pspin::Mixture m;
  pspin::ZeroTempSolution s;
};
struct pspin_chaos {
  pspin::ChaosContext c;
};
struct pspin_disorder {
  pspin::Mixture m;
  pspin::DisorderSample d;
};

namespace {

thread_local std::string g_last_error;

pspin_status fail(pspin_status s, const char* what) {
  g_last_error = what;
  return s;
}

pspin_status map_kind(pspin::ErrorKind k) {
  using pspin::ErrorKind;
  switch (k) {
    case ErrorKind::InvalidArgument: return PSPIN_E_INVALID_ARGUMENT;
    case ErrorKind::Precondition: return PSPIN_E_PRECONDITION;
    case ErrorKind::Domain: return PSPIN_E_DOMAIN;
    case ErrorKind::NotConverged: return PSPIN_E_NOT_CONVERGED;
    case ErrorKind::Resource: return PSPIN_E_RESOURCE;
    case ErrorKind::Inconsistent: return PSPIN_E_INCONSISTENT;
    case ErrorKind::Config: return PSPIN_E_CONFIG;
    case ErrorKind::Io: return PSPIN_E_IO;
  }
  return PSPIN_E_INTERNAL;
}

template <class F>
pspin_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return PSPIN_OK;
  } catch (const pspin::Error& e) {
    return fail(map_kind(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(PSPIN_E_RESOURCE, "out of memory");
  } catch (const std::exception& e) {
    return fail(PSPIN_E_INTERNAL, e.what());
  }
}

#define PSPIN_REQUIRE(cond, msg) \
  if (!(cond)) return fail(PSPIN_E_INVALID_ARGUMENT, msg)

}  // namespace

extern "C" {

const char* pspin_last_error(void) { return g_last_error.c_str(); }

const char* pspin_version(void) { return "1.0.0"; }

pspin_status pspin_mixture_create(const int* degrees, const double* gamma, size_t n, double h, pspin_mixture** out) {
  PSPIN_REQUIRE(out, "out is NULL");
  PSPIN_REQUIRE(n == 0 || (degrees && gamma), "degrees or gamma is NULL");
  *out = nullptr;
  return guarded([&] {
    std::map<int, double> g;
    for (size_t i = 0; i < n; ++i) {
      if (g.count(degrees[i])) throw pspin::PreconditionError("duplicate degree " + std::to_string(degrees[i]));
      g[degrees[i]] = gamma[i];
    }
    *out = new pspin_mixture{pspin::Mixture(g, h)};
  });
}

void pspin_mixture_destroy(pspin_mixture* m) { delete m; }

pspin_status pspin_mixture_xi(const pspin_mixture* m, double s, int order, double* out) {
  PSPIN_REQUIRE(m && out, "NULL argument");
  return guarded([&] { *out = m->m.xi(s, order); });
}

int pspin_mixture_is_even(const pspin_mixture* m) { return m && m->m.is_even() ? 1 : 0; }

pspin_status pspin_classify_phase(const pspin_mixture* m, pspin_phase_class* out) {
  PSPIN_REQUIRE(m && out, "NULL argument");
  return guarded([&] { *out = static_cast<pspin_phase_class>(pspin::classify_phase(m->m)); });
}

pspin_status pspin_minimize_q(const pspin_mixture* m, size_t grid_size, double tol, int max_iters, double margin,
                              pspin_solution** out) {
  PSPIN_REQUIRE(m && out, "NULL argument");
  *out = nullptr;
  pspin::SolverOptions o;
  o.grid_size = grid_size;
  o.tol = tol;
  o.max_iters = max_iters;
  o.margin = margin;
  try {
    *out = new pspin_solution{m->m, pspin::minimize_Q(m->m, o)};
    g_last_error.clear();
    return PSPIN_OK;
  } catch (const pspin::NotConvergedError& e) {
    *out = new pspin_solution{m->m, e.best()};
    return fail(PSPIN_E_NOT_CONVERGED, e.what());
  } catch (const pspin::Error& e) {
    return fail(map_kind(e.kind()), e.what());
  } catch (const std::exception& e) {
    return fail(PSPIN_E_INTERNAL, e.what());
  }
}

void pspin_solution_destroy(pspin_solution* s) { delete s; }
double pspin_solution_gs(const pspin_solution* s) { return s ? s->s.gs : 0.0; }
double pspin_solution_q0(const pspin_solution* s) { return s ? s->s.q0 : 0.0; }
double pspin_solution_L(const pspin_solution* s) { return s ? s->s.param.L : 0.0; }
pspin_phase pspin_solution_phase(const pspin_solution* s) {
  return s ? static_cast<pspin_phase>(s->s.phase) : PSPIN_PHASE_OTHER;
}

pspin_status pspin_solution_certificate(const pspin_solution* s, double tol, double* min_g, double* eq_residual,
                                        int* passes) {
  PSPIN_REQUIRE(s, "solution is NULL");
  const auto& c = s->s.certificate;
  if (min_g) *min_g = c.min_g;
  if (eq_residual) *eq_residual = c.eq_residual;
  if (passes) *passes = c.passes(s->m, tol) ? 1 : 0;
  return PSPIN_OK;
}

size_t pspin_solution_alpha(const pspin_solution* s, double* alpha, double* grid_left, size_t cap) {
  if (!s) return 0;
  const auto& p = s->s.param;
  for (size_t i = 0; i < p.cells() && i < cap; ++i) {
    if (alpha) alpha[i] = p.alpha[i];
    if (grid_left) grid_left[i] = p.grid[i];
  }
  return p.cells();
}

pspin_status pspin_chaos_create(const pspin_solution* s, pspin_chaos** out) {
  PSPIN_REQUIRE(s && out, "NULL argument");
  *out = nullptr;
  return guarded([&] { *out = new pspin_chaos{pspin::build_context(s->m, s->s)}; });
}

void pspin_chaos_destroy(pspin_chaos* c) { delete c; }

pspin_status pspin_chaos_u_t(const pspin_chaos* c, double t, double* out) {
  PSPIN_REQUIRE(c && out, "NULL argument");
  return guarded([&] { *out = pspin::solve_u_t(c->c, t); });
}

pspin_status pspin_chaos_chi(const pspin_chaos* c, int quad_points, double* out) {
  PSPIN_REQUIRE(c && out, "NULL argument");
  PSPIN_REQUIRE(quad_points >= 1, "quad_points must be >= 1");
  return guarded([&] { *out = pspin::chi(c->c, quad_points); });
}

pspin_status pspin_chaos_E(const pspin_chaos* c, double t, double u, double lambda, double* out) {
  PSPIN_REQUIRE(c && out, "NULL argument");
  return guarded([&] { *out = pspin::eval_E(c->c, t, u, lambda); });
}

pspin_status pspin_chaos_error_term(const pspin_chaos* c, double t, double u, double* out) {
  PSPIN_REQUIRE(c && out, "NULL argument");
  return guarded([&] { *out = pspin::eval_error_term(c->c, t, u); });
}

pspin_status pspin_free_energy(const pspin_mixture* m, double beta, int k, uint64_t seed, double* F,
                               double* L_beta) {
  PSPIN_REQUIRE(m && F, "NULL argument");
  PSPIN_REQUIRE(beta > 0.0 && k >= 1, "beta must be > 0 and k >= 1");
  return guarded([&] {
    pspin::KrsbOptions o;
    o.seed = seed;
    auto rows = pspin::beta_sweep(m->m, {beta}, k, o);
    *F = rows.front().F_over_beta * beta;
    if (L_beta) *L_beta = rows.front().L_beta;
  });
}

pspin_status pspin_disorder_sample(const pspin_mixture* m, int N, uint64_t seed, pspin_disorder** out) {
  PSPIN_REQUIRE(m && out, "NULL argument");
  *out = nullptr;
  return guarded([&] { *out = new pspin_disorder{m->m, pspin::sample_disorder(m->m, N, seed)}; });
}

void pspin_disorder_destroy(pspin_disorder* d) { delete d; }

pspin_status pspin_energy(const pspin_disorder* d, const double* sigma, size_t n, double* out) {
  PSPIN_REQUIRE(d && sigma && out, "NULL argument");
  return guarded([&] { *out = pspin::eval_energy(d->d, d->m, std::vector<double>(sigma, sigma + n)); });
}

pspin_status pspin_ground_state(const pspin_disorder* d, int restarts, int max_iters, double grad_tol,
                                double* energy, double* sigma, int* converged) {
  PSPIN_REQUIRE(d && energy, "NULL argument");
  return guarded([&] {
    pspin::AscentOptions o;
    o.restarts = restarts;
    o.max_iters = max_iters;
    o.grad_tol = grad_tol;
    o.start_seed = d->d.seed;
    auto r = pspin::ground_state(d->d, d->m, o);
    *energy = r.energy;
    if (sigma) std::memcpy(sigma, r.sigma.data(), r.sigma.size() * sizeof(double));
    if (converged) *converged = r.converged ? 1 : 0;
  });
}

pspin_status pspin_sk_eigen_oracle(const pspin_disorder* d, double* out) {
  PSPIN_REQUIRE(d && out, "NULL argument");
  return guarded([&] { *out = pspin::sk_eigen_oracle(d->d, d->m); });
}

pspin_status pspin_run(const char* command, const char* config_path, const char* out_dir, int threads,
                       uint64_t seed_offset, int* exit_code) {
  PSPIN_REQUIRE(command && config_path && exit_code, "NULL argument");
  PSPIN_REQUIRE(threads >= 1, "threads must be >= 1");
  return guarded([&] {
    pspin::RunOptions o;
    o.out_dir = out_dir ? out_dir : "";
    o.threads = threads;
    o.seed_offset = seed_offset;
    *exit_code = pspin::run_command(command, config_path, o);
  });
}

}  // extern "C"
