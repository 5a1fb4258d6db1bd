// Acceptance criteria 1-13. Usage: acceptance [--criterion N] ; prints one PASS/FAIL line per criterion.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pspin/chaos.hpp"
#include "pspin/finite_temp.hpp"
#include "pspin/monte_carlo.hpp"
#include "pspin/zero_temp.hpp"

using namespace pspin;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (ok ? "" : "!") << what << "; ";
  }
};

std::string g(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Mixture frsb_example(double h = 0.0) { return Mixture({{2, std::sqrt(0.5)}, {4, std::sqrt(1.0 / 24.0)}}, h); }

// int_0^1 sqrt(1 + q^2/2) dq by antiderivative
double frsb_gs_oracle() {
  const double a = 1.0 / std::sqrt(2.0);
  return 0.5 * std::sqrt(1.0 + a * a) + std::asinh(a) / (2.0 * a);
}

double cscale(const Mixture& m) { return m.xi(1.0, 1) + m.h() * m.h(); }

bool certified(const Mixture& m, const ZeroTempSolution& s) {
  return s.certificate.eq_residual <= 1e-5 * cscale(m) && s.certificate.min_g >= -1e-6;
}

void c1(Outcome& o) {
  auto m = Mixture::sk(1.0);
  auto t0 = std::chrono::steady_clock::now();
  auto s = minimize_Q(m, {});
  double dt = seconds_since(t0);
  o.check(std::fabs(s.gs - std::sqrt(2.0)) <= 1e-4, "|GS-sqrt2|=" + g(std::fabs(s.gs - std::sqrt(2.0))));
  o.check(s.certificate.eq_residual <= 1e-5 * cscale(m), "eq_residual=" + g(s.certificate.eq_residual));
  o.check(s.certificate.min_g >= -1e-6, "min_g=" + g(s.certificate.min_g));
  o.check(dt <= 10.0, "runtime=" + g(dt) + "s");
}

void c2(Outcome& o) {
  auto m = frsb_example();
  auto cf = closed_form_frsb(m);
  double oracle = frsb_gs_oracle();
  o.check(std::fabs(cf.q0) <= 1e-8, "q0=" + g(cf.q0));
  o.check(std::fabs(cf.gs - oracle) <= 1e-10, "|closed-oracle|=" + g(std::fabs(cf.gs - oracle)));
  auto s = minimize_Q(m, {});
  o.check(std::fabs(s.gs - oracle) <= 1e-3, "|minimize-oracle|=" + g(std::fabs(s.gs - oracle)));
}

void c3(Outcome& o) {
  double z = one_rsb_z(3);
  double res = std::fabs(one_rsb_residual(3, z));
  o.check(res <= 1e-12, "z=" + g(z) + " residual=" + g(res));
  auto cf = closed_form_1rsb(3);
  auto s = minimize_Q(Mixture::pure(3), {});
  o.check(std::fabs(cf.gs - s.gs) <= 1e-3, "|closed-minimize|=" + g(std::fabs(cf.gs - s.gs)));
  // xi = s^3 has ground state 1.657 (Crisanti-Sommers); ours is xi = s^3/3
  o.check(std::fabs(cf.gs * std::sqrt(3.0) - 1.6571) <= 1e-3, "GS(s^3)=" + g(cf.gs * std::sqrt(3.0)));
  auto [lo, hi] = std::minmax_element(s.param.alpha.begin(), s.param.alpha.end());
  o.check(*hi - *lo <= 1e-3, "alpha spread=" + g(*hi - *lo));
}

void c4(Outcome& o) {
  std::vector<std::pair<std::string, Mixture>> cases{
      {"sk_h1", Mixture::sk(1.0)},         {"sk_h0.5", Mixture::sk(0.5)},
      {"frsb", frsb_example()},            {"frsb_h0.1", frsb_example(0.1)},
      {"pure3", Mixture::pure(3)},         {"pure4_h0.2", Mixture::pure(4, 0.2)},
      {"2+4_h0.3", Mixture({{2, 0.3}, {4, 1.0}}, 0.3)}};
  for (auto& [name, m] : cases) {
    auto s = minimize_Q(m, {});
    if (!certified(m, s)) {
      o.check(false, name + " not certified");
      continue;
    }
    const auto& p = s.param;
    double I0 = 0.0;
    for (std::size_t i = 0; i < p.cells(); ++i) I0 += p.alpha[i] * (m.xi(p.grid[i + 1], 1) - m.xi(p.grid[i], 1));
    double r1 = std::fabs(1.0 / p.gap() - I0 - 1.0 / p.L) * p.L;
    double r2 = std::fabs(p.L * p.L * (m.xi(s.q0, 1) + m.h() * m.h()) - s.q0);
    o.check(r1 <= 1e-6 && r2 <= 1e-4, name + " B-D0 " + g(r1) + " q0 " + g(r2));
  }
}

void c5(Outcome& o) {
  auto m = frsb_example(0.1);
  auto s = minimize_Q(m, {});
  auto ctx = build_context(m, s);
  double worst = 0.0;
  for (double t : {0.25, 0.5, 0.75})
    for (double u : {0.0, 0.5 * ctx.q0, ctx.q0}) worst = std::max(worst, std::fabs(eval_E(ctx, t, u, 0.0) - 2.0 * s.gs));
  o.check(worst <= 1e-6, "|E-2GS|=" + g(worst));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst_eps = 0.0;
  for (int k = 0; k < 20; ++k) {
    double t = U(rng), u = 2.0 * U(rng) - 1.0;
    worst_eps = std::max(worst_eps, std::fabs(eval_E(ctx, t, u, 0.0) - 2.0 * s.gs + eval_error_term(ctx, t, u)));
  }
  o.check(worst_eps <= 1e-8, "|E-2GS+eps|=" + g(worst_eps));

  auto m0 = frsb_example();
  auto s0 = minimize_Q(m0, {});
  auto ctx0 = build_context(m0, s0);
  double u = 0.5 * (ctx0.q0 + 1.0), least = 1e300;
  for (double t : {0.25, 0.5, 0.75})
    for (double sg : {-1.0, 1.0}) least = std::min(least, eval_error_term(ctx0, t, sg * u));
  o.check(least >= 1e-6, "min eps at |u|=(q0+1)/2: " + g(least));
}

void c6(Outcome& o) {
  auto m = frsb_example(0.1);
  auto s = minimize_Q(m, {});
  auto ctx = build_context(m, s);
  double worst = 0.0;
  for (double t : {0.25, 0.5, 0.75})
    for (double u : {0.0, 0.5 * ctx.q0, ctx.q0, -0.5 * ctx.q0, -ctx.q0}) {  // |u| <= q0
      const double e = 1e-5;
      double dE = (eval_E(ctx, t, u, e) - eval_E(ctx, t, u, -e)) / (2.0 * e);
      worst = std::max(worst, std::fabs(dE - f_t(ctx, t, u)));
    }
  o.check(worst <= 1e-4, "|dE/dlambda-f_t|=" + g(worst));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst_g = 0.0;
  for (int k = 0; k < 5; ++k) {
    auto q = OrderParamZeroT::uniform(200, 0.0);
    double a = 0.0;
    for (double& v : q.alpha) v = (a += 2.0 * U(rng) / 200.0);
    q.L = q.mass() + 0.2 + U(rng);
    std::vector<double> dir(201);
    for (double& d : dir) d = U(rng) - 0.5;
    auto gr = grad_Q(m, q);
    double an = gr.dL * dir[0];
    for (std::size_t i = 0; i < 200; ++i) an += gr.dAlpha[i] * dir[i + 1];
    auto shifted = [&](double sft) {
      auto r = q;
      r.L += sft * dir[0];
      for (std::size_t i = 0; i < 200; ++i) r.alpha[i] += sft * dir[i + 1];
      return eval_Q(m, r);
    };
    const double e = 1e-6;
    double fd = (shifted(e) - shifted(-e)) / (2.0 * e);
    worst_g = std::max(worst_g, std::fabs(fd - an) / std::fabs(an));
  }
  o.check(worst_g <= 1e-6, "grad_Q rel=" + g(worst_g));

  for (auto mm : {Mixture::sk(1.0), frsb_example(0.1)}) {
    double h = mm.h(), dh = 1e-3 * h;
    auto sol = minimize_Q(mm, {});
    double fd = (minimize_Q(mm.with_field(h + dh), {}).gs - minimize_Q(mm.with_field(h - dh), {}).gs) / (2.0 * dh);
    double an = gs_partials(mm, sol).d_h;
    o.check(std::fabs(an - h * sol.param.L) <= 1e-12 && std::fabs(fd - an) / std::fabs(an) <= 1e-3,
            "dGS/dh h=" + g(h) + " rel=" + g(std::fabs(fd - an) / std::fabs(an)));
  }
}

void c7(Outcome& o) {
  auto m = Mixture::sk(0.0);
  auto seeds = seed_list(20, 0);
  McOptions opt;
  auto t0 = std::chrono::steady_clock::now();
  auto runs = ground_state_runs(m, 200, seeds, opt);
  double worst = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    auto d = sample_disorder(m, 200, seeds[i], Stream::Common);
    worst = std::max(worst, std::fabs(runs[i].energy - sk_eigen_oracle(d, m)));
    mean += runs[i].energy / 200.0 / seeds.size();
  }
  double dt = seconds_since(t0);
  o.check(worst <= 1e-8, "max |GS-oracle|=" + g(worst));
  o.check(mean >= 0.90 && mean <= 1.00, "mean L_N/N=" + g(mean));
  o.check(dt <= 120.0, "runtime=" + g(dt) + "s");
}

void c8(Outcome& o) {
  auto seeds = seed_list(50, 0);
  McOptions opt;
  auto mean_R = [&](const Mixture& m) {
    auto runs = coupled_runs(m, 150, 0.5, seeds, opt);
    double s = 0.0;
    for (auto& r : runs) s += r.overlap;
    return s / runs.size();
  };
  double r0 = mean_R(Mixture::sk(0.0));
  o.check(r0 <= 0.2, "h=0 mean|R|=" + g(r0));
  auto m1 = Mixture::sk(1.0);
  auto ctx = build_context(m1, minimize_Q(m1, {}));
  double u = solve_u_t(ctx, 0.5), r1 = mean_R(m1);
  o.check(std::fabs(u - 2.0 / 3.0) <= 1e-8, "u_0.5=" + g(u));
  o.check(std::fabs(r1 - u) <= 0.1, "h=1 mean R=" + g(r1));
}

void c9(Outcome& o) {
  McOptions opt;
  auto v = variance_identity_check(Mixture::sk(0.0), 100, seed_list(40, 0), 8, opt);
  double se = std::hypot(v.se_direct, v.se_identity);
  o.check(v.z_score <= 3.0, "direct=" + g(v.var_direct) + " identity=" + g(v.var_via_identity) + " z=" +
                                g(v.z_score) + " (naive z=" + g(std::fabs(v.var_direct - v.var_via_identity) / se) +
                                ")");
}

void c10(Outcome& o) {
  McOptions opt;
  auto rows = superconcentration_trend(Mixture::sk(0.0), {50, 100, 200}, seed_list(40, 0), opt);
  std::string d;
  for (auto& r : rows) d += "N=" + std::to_string(r.N) + ":" + g(r.var_over_N) + "+-" + g(r.stderr_) + " ";
  o.check(trend_nonincreasing(rows), d);
}

void c11(Outcome& o) {
  auto m = Mixture::sk(1.0);
  auto ctx = build_context(m, minimize_Q(m, {}));
  double x = chi(ctx, 32);
  McOptions opt;
  auto r = clt_check(m, 100, seed_list(200, 0), x, opt);
  o.check(r.ks_distance <= 0.15, "chi=" + g(x) + " KS=" + g(r.ks_distance) + " sd(W)=" + g(r.sd_W));
}

void c12(Outcome& o) {
  auto m = Mixture::sk(1.0);
  auto s = minimize_Q(m, {});
  auto rows = beta_sweep(m, {4, 8, 16, 32}, 2);
  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i)
    monotone = monotone && std::fabs(rows[i].F_over_beta - s.gs) <= std::fabs(rows[i - 1].F_over_beta - s.gs);
  std::string d;
  for (auto& r : rows) d += g(r.F_over_beta) + " ";
  o.check(monotone, "F/beta " + d + "-> GS " + g(s.gs));
  double gap = std::fabs(rows.back().F_over_beta - s.gs), dL = std::fabs(rows.back().L_beta - s.param.L);
  o.check(gap <= 0.05, "|F(32)/32-GS|=" + g(gap));
  o.check(dL <= 0.05, "|L_32-L0|=" + g(dL));
}

struct CliRun {
  int code = -1;
  std::string output;
};

CliRun cli(const std::string& args, const fs::path& out) {
  std::string cmd = std::string(PSPIN_CLI_PATH) + " " + args + " --out " + out.string() + " 2>&1";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  while (std::fgets(buf.data(), buf.size(), p)) r.output += buf.data();
  int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

void c13(Outcome& o) {
  fs::path src(PSPIN_SOURCE_DIR);
  fs::path out = fs::temp_directory_path() / ("pspin_accept_" + std::to_string(::getpid()));
  fs::create_directories(out);
  for (const char* name : {"sk_h1", "sk_h0", "frsb", "frsb_h01", "pure3", "sweep_sk_h1", "chaos_mc", "variance_sk",
                           "clt_sk"}) {
    auto r = cli("verify --config " + (src / "configs" / (std::string(name) + ".yaml")).string(), out);
    o.check(r.code == 0, std::string(name) + " exit " + std::to_string(r.code));
  }
  struct Fault {
    const char* command;
    const char* file;
    int code;
    const char* marker;
  };
  for (auto f : {Fault{"verify", "margin_negative", 3, "FAIL solver.margin_positive"},
                 Fault{"verify", "empty_mixture", 1, "field 'mixture'"},
                 Fault{"verify", "p1", 1, "field 'mixture[0].p'"},
                 Fault{"verify", "cap", 1, "field 'mc.N_list[0]'"},
                 Fault{"chaos", "odd_chaos", 1, "even mixture"}}) {
    auto r = cli(std::string(f.command) + " --config " + (src / "configs" / "faults" / (std::string(f.file) + ".yaml")).string(), out);
    o.check(r.code == f.code && r.output.find(f.marker) != std::string::npos,
            std::string(f.file) + " exit " + std::to_string(r.code));
  }
  fs::remove_all(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-13)")->check(CLI::Range(1, 13));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> all{
      {"RS oracle", c1},           {"FRSB oracle", c2},         {"1RSB oracle", c3},
      {"consistency identities", c4}, {"coupled functional", c5}, {"derivative checks", c6},
      {"MC p=2 exactness", c7},    {"chaos empirics", c8},      {"variance identity", c9},
      {"superconcentration", c10}, {"CLT", c11},                {"beta to infinity", c12},
      {"invariant suite", c13}};
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
      all[i].second(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::printf("criterion %zu %-24s %s  [%.1fs] %s\n", i + 1, all[i].first, o.pass ? "PASS" : "FAIL",
                seconds_since(t0), o.detail.str().c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
