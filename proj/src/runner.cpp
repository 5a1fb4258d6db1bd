#include "pspin/runner.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "pspin/chaos.hpp"
#include "pspin/errors.hpp"
#include "pspin/finite_temp.hpp"
#include "pspin/monte_carlo.hpp"
#include "pspin/numerics.hpp"
#include "pspin/zero_temp.hpp"

namespace pspin {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string> kSolveCsvHeader{"s", "g"};
const std::vector<std::string> kSweepCsvHeader{"beta", "F_over_beta", "L_beta"};
const std::vector<std::string> kChaosCsvHeader{"t", "u_t", "xi_u_t"};
const std::vector<std::string> kSimulateCsvHeader{"experiment", "N", "seed", "t", "energy", "overlap", "restarts",
                                                  "converged"};
const std::vector<std::string> kOverlapCsvHeader{"N", "t", "n_pairs", "mean_overlap", "stderr", "u_t"};
const std::vector<std::string> kVerifyCsvHeader{"invariant", "pass", "value", "tolerance", "detail"};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ostream& out_of(const RunOptions& o) { return o.out ? *o.out : std::cout; }

fs::path output_path(const RunOptions& o, const std::string& file) {
  fs::path p(file);
  if (p.is_absolute()) return p;
  std::string dir = o.out_dir;
  if (dir.empty())
    if (const char* env = std::getenv("PSPIN_OUT_DIR")) dir = env;
  if (dir.empty()) dir = ".";
  return fs::path(dir) / p;
}

fs::path csv_out(const ExperimentConfig& c, const RunOptions& o, const char* command) {
  return output_path(o, c.csv_path.empty() ? c.name + "_" + command + ".csv" : c.csv_path);
}

fs::path json_out(const ExperimentConfig& c, const RunOptions& o, const char* command) {
  return output_path(o, c.json_path.empty() ? c.name + "_" + command + ".json" : c.json_path);
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    f_.open(path, std::ios::binary | std::ios::trunc);
    if (!f_) throw IoError("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) f_ << (i ? "," : "") << csv_field(fields[i]);
    f_ << "\r\n";
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  std::ofstream f_;
};

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << j.dump(2) << "\n";
}

fs::path sibling(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix + p.extension().string());
}

std::string fmt(double v) { return csv_number(v); }

json mixture_json(const Mixture& m) {
  json g = json::object();
  for (auto [p, v] : m.gamma()) g[std::to_string(p)] = v;
  return {{"gamma", g}, {"h", m.h()}, {"even", m.is_even()}};
}

json base_json(const ExperimentConfig& c, const std::string& command) {
  return {{"schema_version", kSchemaVersion},
          {"command", command},
          {"name", c.name},
          {"mixture", mixture_json(c.mixture)}};
}

json certificate_json(const Mixture& m, const Certificate& cert, double tol) {
  return {{"min_g", cert.min_g},
          {"eq_residual", cert.eq_residual},
          {"support_violation", cert.support_violation},
          {"tolerance", tol},
          {"passes", cert.passes(m, tol)}};
}

constexpr double kCertTol = 1e-5;

int count_atoms(const OrderParamZeroT& p) {
  double floor = 0.0;
  for (double a : p.alpha) floor = std::max(floor, a);
  floor = std::max(1e-9, 1e-6 * floor);
  int atoms = 0;
  double prev = 0.0;
  for (double a : p.alpha) {
    if (a - prev > floor) ++atoms;
    prev = a;
  }
  return atoms;
}

json solution_json(const Mixture& m, const ZeroTempSolution& s) {
  return {{"gs", s.gs},
          {"q0", s.q0},
          {"L0", s.param.L},
          {"delta0", s.param.gap()},
          {"numerical_phase", to_string(s.phase)},
          {"atoms", count_atoms(s.param)},
          {"iterations", s.iterations},
          {"certificate", certificate_json(m, s.certificate, kCertTol)},
          {"grid", s.param.grid},
          {"alpha_vals", s.param.alpha}};
}

void require_margin(const ExperimentConfig& c) {
  if (!(c.solver.margin > 0.0))
    throw PreconditionError("invariant solver.margin_positive failed: solver.margin = " + fmt(c.solver.margin) +
                            " must be > 0");
}

// solution plus a convergence flag; the best iterate is kept on non-convergence
ZeroTempSolution solve(const ExperimentConfig& c, bool& converged) {
  require_margin(c);
  try {
    converged = true;
    return minimize_Q(c.mixture, c.solver);
  } catch (const NotConvergedError& e) {
    converged = false;
    return e.best();
  }
}

// closed form for the classified phase, rescaled for pure mixtures with gamma_p^2 != 1/p
std::optional<ZeroTempSolution> closed_form(const Mixture& m, std::size_t grid) {
  switch (classify_phase(m)) {
    case PhaseClass::RS: return closed_form_rs(m, grid);
    case PhaseClass::FullRSB: return closed_form_frsb(m, 1e-12, grid);
    case PhaseClass::OneRSBPure: {
      int p = *m.pure_degree();
      auto s = closed_form_1rsb(p, grid);
      double scale = m.gamma(p) * std::sqrt(static_cast<double>(p));
      s.gs *= scale;
      s.param.L /= scale;
      for (double& a : s.param.alpha) a /= scale;
      return s;
    }
    case PhaseClass::Other: return std::nullopt;
  }
  return std::nullopt;
}

void require_even(const ExperimentConfig& c, const std::string& what) {
  if (!c.mixture.is_even())
    throw ConfigError(c.source + ": field 'mixture': " + what + " requires an even mixture (odd gamma_p present)");
}

}  // namespace

int run_solve(const ExperimentConfig& c, const RunOptions& o) {
  bool converged = false;
  auto sol = solve(c, converged);
  const Mixture& m = c.mixture;
  json j = base_json(c, "solve");
  j["converged"] = converged;
  j["phase"] = to_string(classify_phase(m));
  j["h"] = m.h();
  j.update(solution_json(m, sol));
  auto part = gs_partials(m, sol);
  json dg = json::object();
  for (auto [p, v] : part.d_gamma) dg[std::to_string(p)] = v;
  j["partials"] = {{"d_h", part.d_h}, {"d_gamma", dg}};
  if (auto cf = closed_form(m, c.solver.grid_size)) {
    j["closed_form"] = {{"gs", cf->gs},
                        {"q0", cf->q0},
                        {"L0", cf->param.L},
                        {"gs_abs_diff", std::fabs(cf->gs - sol.gs)},
                        {"q0_abs_diff", std::fabs(cf->q0 - sol.q0)},
                        {"L_abs_diff", std::fabs(cf->param.L - sol.param.L)}};
  } else {
    j["closed_form"] = nullptr;
  }
  auto csv_path = csv_out(c, o, "solve");
  CsvWriter csv(csv_path, kSolveCsvHeader);
  for (auto [s, g] : sol.certificate.g_samples) csv.row({fmt(s), fmt(g)});
  write_json(json_out(c, o, "solve"), j);
  out_of(o) << "solve " << c.name << ": gs=" << std::setprecision(12) << sol.gs << " phase=" << j["phase"].get<std::string>()
            << " numerical_phase=" << to_string(sol.phase) << " q0=" << sol.q0
            << (converged ? "" : " (not converged, best iterate written)") << "\n";
  return converged ? kExitOk : kExitNotConverged;
}

int run_phase(const ExperimentConfig& c, const RunOptions& o) {
  bool converged = false;
  auto sol = solve(c, converged);
  const Mixture& m = c.mixture;
  json j = base_json(c, "phase");
  j["converged"] = converged;
  j["phase"] = to_string(classify_phase(m));
  j["numerical_phase"] = to_string(sol.phase);
  j["q0"] = sol.q0;
  j["atoms"] = count_atoms(sol.param);
  j["gs"] = sol.gs;
  j["L0"] = sol.param.L;
  if (c.finite_temp) {
    auto rows = beta_sweep(m, c.finite_temp->betas, c.finite_temp->k, c.finite_temp->krsb);
    std::vector<std::string> header = kSweepCsvHeader;
    if (!rows.empty())
      for (double s : rows.front().s_grid) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "bx_%.4f", s);
        header.emplace_back(buf);
      }
    header.emplace_back("mass_below");
    header.emplace_back("beta_one_minus_qhat");
    CsvWriter csv(csv_out(c, o, "phase"), header);
    json sweep = json::array();
    for (const auto& r : rows) {
      std::vector<std::string> f{fmt(r.beta), fmt(r.F_over_beta), fmt(r.L_beta)};
      for (double v : r.scaled_x) f.push_back(fmt(v));
      f.push_back(fmt(r.mass_below));
      f.push_back(fmt(r.one_minus_qhat_scaled));
      csv.row(f);
      sweep.push_back({{"beta", r.beta},
                       {"F_over_beta", r.F_over_beta},
                       {"L_beta", r.L_beta},
                       {"mass_below", r.mass_below},
                       {"beta_one_minus_qhat", r.one_minus_qhat_scaled},
                       {"gap_to_gs", r.F_over_beta - sol.gs},
                       {"gap_to_L0", r.L_beta - sol.param.L},
                       {"q", r.order.q},
                       {"x", r.order.x}});
    }
    j["beta_sweep"] = {{"k", c.finite_temp->k}, {"rows", sweep}};
  } else {
    j["beta_sweep"] = nullptr;
  }
  write_json(json_out(c, o, "phase"), j);
  out_of(o) << "phase " << c.name << ": " << j["phase"].get<std::string>() << " (numerical " << to_string(sol.phase)
            << ", q0=" << std::setprecision(6) << sol.q0 << ")\n";
  return converged ? kExitOk : kExitNotConverged;
}

int run_chaos(const ExperimentConfig& c, const RunOptions& o) {
  require_even(c, "chaos analysis");
  bool converged = false;
  auto sol = solve(c, converged);
  if (!converged) {
    out_of(o) << "chaos " << c.name << ": zero-temperature solver did not converge\n";
    return kExitNotConverged;
  }
  auto ctx = build_context(c.mixture, sol);
  ChaosConfig cc = c.chaos.value_or(ChaosConfig{});
  if (cc.t_grid.empty())
    for (int i = 1; i < 20; ++i) cc.t_grid.push_back(0.05 * i);
  auto prof = chaos_profile(ctx, cc.t_grid, cc.quad_points);
  CsvWriter csv(csv_out(c, o, "chaos"), kChaosCsvHeader);
  for (std::size_t i = 0; i < prof.t_grid.size(); ++i)
    csv.row({fmt(prof.t_grid[i]), fmt(prof.u_t[i]), fmt(c.mixture.xi(prof.u_t[i]))});
  json j = base_json(c, "chaos");
  j["chi"] = prof.chi;
  j["quad_points"] = cc.quad_points;
  j["t_grid"] = prof.t_grid;
  j["u_t"] = prof.u_t;
  j["context"] = {{"L0", ctx.L0}, {"q0", ctx.q0}, {"delta0", ctx.delta0}, {"B", ctx.B},
                  {"D0", ctx.D(0.0)}, {"gs", sol.gs}, {"gs_dual", ctx.gs_dual}};
  write_json(json_out(c, o, "chaos"), j);
  out_of(o) << "chaos " << c.name << ": chi=" << std::setprecision(12) << prof.chi << "\n";
  return kExitOk;
}

int run_simulate(const ExperimentConfig& c, const RunOptions& o) {
  if (!c.mc) throw ConfigError(c.source + ": field 'mc': required for simulate");
  const McConfig& mc = *c.mc;
  const Mixture& m = c.mixture;
  McOptions opt;
  opt.threads = std::max(1, o.threads);
  opt.cap = mc.cap;
  opt.ascent.restarts = mc.restarts;
  opt.ascent.max_iters = mc.max_iters;
  opt.ascent.grad_tol = mc.grad_tol;
  const std::uint64_t offset = mc.seed_offset + o.seed_offset;
  auto seeds = seed_list(mc.seeds, offset);

  // chaos predictions need a certified zero-temperature solution of an even mixture
  std::optional<ChaosContext> ctx;
  auto context = [&]() -> const ChaosContext& {
    if (!ctx) {
      require_even(c, "chaos prediction");
      bool conv = false;
      auto sol = solve(c, conv);
      if (!conv) throw InconsistentError("zero-temperature solver did not converge; no chaos prediction");
      ctx = build_context(m, sol);
    }
    return *ctx;
  };

  auto csv_path = csv_out(c, o, "simulate");
  CsvWriter csv(csv_path, kSimulateCsvHeader);
  std::unique_ptr<CsvWriter> overlap_csv;
  json j = base_json(c, "simulate");
  j["seeds"] = {{"count", mc.seeds}, {"offset", offset}};
  j["optimizer_lower_bound"] = m.max_degree() >= 3;
  j["ascent"] = {{"restarts", mc.restarts}, {"max_iters", mc.max_iters}, {"grad_tol", mc.grad_tol}};
  json results = json::object();
  auto yes = [](bool b) { return std::string(b ? "true" : "false"); };

  for (const auto& exp : mc.experiments) {
    json ej = json::array();
    if (exp == "ground_state" || exp == "superconcentration") {
      std::vector<SuperRow> trend;
      for (int N : mc.N_list) {
        auto runs = ground_state_runs(m, N, seeds, opt);
        std::vector<double> L;
        int conv = 0;
        for (std::size_t i = 0; i < runs.size(); ++i) {
          csv.row({exp, std::to_string(N), std::to_string(seeds[i]), "", fmt(runs[i].energy), "",
                   std::to_string(runs[i].restarts), yes(runs[i].converged)});
          L.push_back(runs[i].energy);
          conv += runs[i].converged;
        }
        std::vector<double> per_site;
        for (double v : L) per_site.push_back(v / N);
        json row = {{"N", N},
                    {"mean_energy_per_site", num::mean(per_site)},
                    {"var_L", num::variance(L)},
                    {"converged_runs", conv}};
        if (exp == "superconcentration" && L.size() >= 2) {
          auto sr = super_row(N, L);
          trend.push_back(sr);
          row["var_over_N"] = sr.var_over_N;
          row["stderr"] = sr.stderr_;
        }
        ej.push_back(row);
      }
      if (exp == "superconcentration") results["superconcentration_nonincreasing"] = trend_nonincreasing(trend);
    } else if (exp == "coupled") {
      if (!overlap_csv) overlap_csv = std::make_unique<CsvWriter>(sibling(csv_path, "_overlap"), kOverlapCsvHeader);
      for (int N : mc.N_list)
        for (double t : mc.t_values) {
          auto runs = coupled_runs(m, N, t, seeds, opt);
          std::vector<double> R;
          for (std::size_t i = 0; i < runs.size(); ++i) {
            csv.row({exp, std::to_string(N), std::to_string(seeds[i]), fmt(t), fmt(runs[i].L1),
                     fmt(runs[i].overlap), std::to_string(mc.restarts), yes(runs[i].converged)});
            R.push_back(runs[i].overlap);
          }
          double mean = num::mean(R), se = std::sqrt(num::variance(R) / R.size());
          double pred = std::nan("");
          if (t > 0.0 && t < 1.0) pred = solve_u_t(context(), t);
          overlap_csv->row({std::to_string(N), fmt(t), std::to_string(R.size()), fmt(mean), fmt(se),
                            std::isnan(pred) ? "" : fmt(pred)});
          json row = {{"N", N}, {"t", t}, {"mean_overlap", mean}, {"stderr", se}};
          row["u_t"] = std::isnan(pred) ? json(nullptr) : json(pred);
          ej.push_back(row);
        }
    } else if (exp == "variance_identity") {
      for (int N : mc.N_list) {
        auto vi = variance_identity_check(m, N, seeds, mc.t_points, opt);
        for (std::size_t i = 0; i < seeds.size(); ++i) {
          csv.row({exp, std::to_string(N), std::to_string(seeds[i]), "", fmt(vi.L_values[i]), "",
                   std::to_string(mc.restarts), ""});
          for (std::size_t k = 0; k < vi.t_nodes.size(); ++k)
            csv.row({exp + "_coupled", std::to_string(N), std::to_string(seeds[i]), fmt(vi.t_nodes[k]), "",
                     fmt(vi.R[i][k]), std::to_string(mc.restarts), ""});
        }
        ej.push_back({{"N", N},
                      {"var_direct", vi.var_direct},
                      {"var_via_identity", vi.var_via_identity},
                      {"se_direct", vi.se_direct},
                      {"se_identity", vi.se_identity},
                      {"z_score", vi.z_score},
                      {"t_nodes", vi.t_nodes},
                      {"mean_xi_R", vi.mean_xi_R}});
      }
    } else if (exp == "clt") {
      double chi_v = chi(context(), c.chaos ? c.chaos->quad_points : 32);
      auto clt_seeds = seed_list(mc.clt_samples, offset);
      for (int N : mc.N_list) {
        auto r = clt_check(m, N, clt_seeds, chi_v, opt);
        for (std::size_t i = 0; i < clt_seeds.size(); ++i)
          csv.row({exp, std::to_string(N), std::to_string(clt_seeds[i]), "", fmt(r.L[i]), "",
                   std::to_string(mc.restarts), ""});
        ej.push_back({{"N", N},
                      {"samples", clt_seeds.size()},
                      {"chi_used", r.chi_used},
                      {"ks_distance", r.ks_distance},
                      {"sd_W", r.sd_W},
                      {"ks_raw", r.ks_raw}});
      }
    }
    results[exp] = ej;
  }
  j["results"] = results;
  write_json(json_out(c, o, "simulate"), j);
  out_of(o) << "simulate " << c.name << ": wrote " << csv_path.string() << "\n";
  return kExitOk;
}

namespace {

struct Checker {
  std::vector<CheckRow> rows;
  void add(const std::string& name, bool pass, double value, double tol, const std::string& detail = "") {
    rows.push_back({name, pass, value, tol, detail});
  }
  // runs f; an exception becomes a failed row
  template <class F>
  void guard(const std::string& name, F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      add(name, false, std::nan(""), 0.0, e.what());
    }
  }
};

std::vector<double> tangent_direction(const std::vector<double>& sigma, const CounterRng& rng, std::uint64_t base) {
  std::vector<double> v(sigma.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.normal(base + i);
  double c = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) c += v[i] * sigma[i];
  c /= static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * sigma[i];
  return v;
}

}  // namespace

std::vector<CheckRow> verify_checks(const ExperimentConfig& c, int threads) {
  Checker ck;
  const Mixture& m = c.mixture;
  const double h = m.h();
  CounterRng rng(c.verify.seed, 5, 0);
  std::uint64_t draw = 0;
  auto u01 = [&] { return rng.uniform(draw++); };

  bool margin_ok = c.solver.margin > 0.0;
  ck.add("solver.margin_positive", margin_ok, c.solver.margin, 0.0,
         margin_ok ? "" : "feasibility margin must be > 0");

  if (margin_ok) {
    ZeroTempSolution sol;
    bool have = false;
    ck.guard("solver.converged", [&] {
      bool conv = false;
      sol = solve(c, conv);
      have = true;
      ck.add("solver.converged", conv, sol.iterations, c.solver.max_iters);
    });
    if (have) {
      const auto& cert = sol.certificate;
      double cscale = m.xi(1.0, 1) + h * h;
      ck.add("solver.certificate.eq_residual", cert.eq_residual <= kCertTol * cscale, cert.eq_residual,
             kCertTol * cscale);
      ck.add("solver.certificate.min_g", cert.min_g >= -1e-6, cert.min_g, -1e-6);
      ck.add("solver.certificate.support", std::fabs(cert.support_violation) <= kCertTol, cert.support_violation,
             kCertTol);
      ck.guard("solver.feasibility", [&] {
        sol.param.validate(std::min(c.solver.margin, 0.5 * sol.param.gap()));
        ck.add("solver.feasibility", sol.param.gap() > 0.0, sol.param.gap(), 0.0);
      });
      ck.guard("solver.closed_form_agreement", [&] {
        if (auto cf = closed_form(m, c.solver.grid_size)) {
          double d = std::fabs(cf->gs - sol.gs);
          ck.add("solver.closed_form_agreement", d <= 1e-3, d, 1e-3, to_string(classify_phase(m)));
        }
      });

      // B - D(0) = 1/L0 reduces to 1/delta0 - int alpha xi'' = 1/L0
      const auto& p = sol.param;
      double I0 = 0.0;
      for (std::size_t i = 0; i < p.cells(); ++i) I0 += p.alpha[i] * (m.xi(p.grid[i + 1], 1) - m.xi(p.grid[i], 1));
      double lhs = 1.0 / p.gap() - I0, rhs = 1.0 / p.L;
      double rel = std::fabs(lhs - rhs) / rhs;
      ck.add("identity.B_minus_D0_equals_inv_L0", rel <= 1e-6, rel, 1e-6);
      double lem4 = std::fabs(p.L * p.L * (m.xi(sol.q0, 1) + h * h) - sol.q0);
      ck.add("identity.q0_fixed_point", lem4 <= 1e-4, lem4, 1e-4);

      ck.guard("gradient.grad_Q", [&] {
        double worst = 0.0;
        std::size_t M = std::min<std::size_t>(200, c.solver.grid_size);
        for (int k = 0; k < 5; ++k) {
          auto q = OrderParamZeroT::uniform(M, 0.0);
          double a = 0.0;
          for (std::size_t i = 0; i < M; ++i) q.alpha[i] = (a += 2.0 * u01() / M);
          q.L = q.mass() + 0.2 + u01();
          std::vector<double> dir(M + 1);
          for (double& d : dir) d = u01() - 0.5;
          auto g = grad_Q(m, q);
          double an = g.dL * dir[0];
          for (std::size_t i = 0; i < M; ++i) an += g.dAlpha[i] * dir[i + 1];
          const double e = 1e-6;
          auto shifted = [&](double s) {
            auto r = q;
            r.L += s * dir[0];
            for (std::size_t i = 0; i < M; ++i) r.alpha[i] += s * dir[i + 1];
            return eval_Q(m, r);
          };
          double fd = (shifted(e) - shifted(-e)) / (2.0 * e);
          worst = std::max(worst, std::fabs(fd - an) / std::max(std::fabs(an), 1e-12));
        }
        ck.add("gradient.grad_Q", worst <= 1e-6, worst, 1e-6);
      });

      if (h > 0.0 && cert.passes(m, kCertTol)) {
        ck.guard("identity.d_gs_d_h", [&] {
          double dh = 1e-3 * h;
          SolverOptions so = c.solver;
          double up = minimize_Q(m.with_field(h + dh), so).gs, dn = minimize_Q(m.with_field(h - dh), so).gs;
          double fd = (up - dn) / (2.0 * dh), an = gs_partials(m, sol).d_h;
          double r = std::fabs(fd - an) / std::fabs(an);
          ck.add("identity.d_gs_d_h", r <= 1e-3, r, 1e-3);
        });
      }

      if (m.is_even()) {
        ck.guard("chaos.context", [&] {
          auto ctx = build_context(m, sol);
          ck.add("chaos.context", true, ctx.B - ctx.D(0.0), 0.0);
          double worst = 0.0, worst_d = 0.0;
          for (double t : {0.25, 0.5, 0.75})
            for (double u : {0.0, 0.5 * ctx.q0, ctx.q0}) {
              if (std::fabs(u) >= 1.0) continue;  // the RS endpoint u = q0 = 1 is excluded
              worst = std::max(worst, std::fabs(eval_E(ctx, t, u, 0.0) - 2.0 * sol.gs));
              double e = 1e-5;
              double dE = (eval_E(ctx, t, u, e) - eval_E(ctx, t, u, -e)) / (2.0 * e);
              worst_d = std::max(worst_d, std::fabs(dE - f_t(ctx, t, u)));
            }
          ck.add("chaos.E_equals_2GS", worst <= 1e-6, worst, 1e-6);
          ck.add("chaos.dE_dlambda_equals_f_t", worst_d <= 1e-4, worst_d, 1e-4);
          double worst_eps = 0.0;
          for (int k = 0; k < c.verify.random_points; ++k) {
            double t = u01(), u = 2.0 * u01() - 1.0;
            double r = eval_E(ctx, t, u, 0.0) - (2.0 * sol.gs - eval_error_term(ctx, t, u));
            worst_eps = std::max(worst_eps, std::fabs(r));
          }
          ck.add("chaos.E_equals_2GS_minus_eps", worst_eps <= 1e-8, worst_eps, 1e-8);
          double worst_root = 0.0;
          for (double t : {0.25, 0.5, 0.75}) {
            double u = solve_u_t(ctx, t);
            worst_root = std::max(worst_root, h == 0.0 ? std::fabs(u) : std::fabs(f_t(ctx, t, u)));
          }
          ck.add("chaos.u_t_root", worst_root <= 1e-10, worst_root, 1e-10);
        });
      }
    }
  }

  ck.guard("mc.gradient", [&] {
    const int N = m.max_degree() <= 4 ? 10 : 5;
    auto d = sample_disorder(m, N, c.verify.seed, Stream::Disorder);
    Hamiltonian H{&m, {{1.0, &d}}};
    CounterRng r(c.verify.seed, 6, 0);
    std::vector<double> sigma(N), g;
    r.normals(sigma);
    double n2 = 0.0;
    for (double v : sigma) n2 += v * v;
    for (double& v : sigma) v *= std::sqrt(N / n2);
    H.energy_grad(sigma, g);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      auto v = tangent_direction(sigma, r, 1000 * (k + 1));
      double vn = 0.0, an = 0.0;
      for (int i = 0; i < N; ++i) {
        vn += v[i] * v[i];
        an += g[i] * v[i];
      }
      vn = std::sqrt(vn);
      // geodesic through sigma with initial velocity v keeps every evaluation on the sphere
      auto at = [&](double e) {
        double th = e * vn / std::sqrt(static_cast<double>(N));
        std::vector<double> s(N);
        for (int i = 0; i < N; ++i) s[i] = std::cos(th) * sigma[i] + std::sqrt(static_cast<double>(N)) * std::sin(th) * v[i] / vn;
        return eval_energy(d, m, s);
      };
      const double e = 1e-5;
      double fd = (at(e) - at(-e)) / (2.0 * e);
      worst = std::max(worst, std::fabs(fd - an) / std::max(std::fabs(an), 1e-12));
    }
    ck.add("mc.gradient", worst <= 1e-5, worst, 1e-5);
  });

  ck.guard("mc.sk_oracle", [&] {
    auto sk = Mixture::sk(0.0);
    McOptions opt;
    opt.threads = threads;
    opt.ascent.restarts = 1;
    auto seeds = seed_list(3, c.verify.seed);
    auto runs = ground_state_runs(sk, 60, seeds, opt);
    double worst = 0.0, sphere = 0.0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      auto d = sample_disorder(sk, 60, seeds[i], Stream::Common);
      worst = std::max(worst, std::fabs(runs[i].energy - sk_eigen_oracle(d, sk)));
      double n2 = 0.0;
      for (double v : runs[i].sigma) n2 += v * v;
      sphere = std::max(sphere, std::fabs(n2 / 60.0 - 1.0));
    }
    ck.add("mc.sk_oracle", worst <= 1e-8, worst, 1e-8);
    ck.add("mc.sphere_retention", sphere <= 1e-10, sphere, 1e-10);
  });
  return ck.rows;
}

int run_verify(const ExperimentConfig& c, const RunOptions& o) {
  auto rows = verify_checks(c, o.threads);
  auto& os = out_of(o);
  bool all = true;
  CsvWriter csv(csv_out(c, o, "verify"), kVerifyCsvHeader);
  json arr = json::array();
  os << "verify " << c.name << "\n";
  for (const auto& r : rows) {
    all = all && r.pass;
    char line[256];
    std::snprintf(line, sizeof line, "  %-4s %-40s value=%-12.4g tol=%-10.3g", r.pass ? "PASS" : "FAIL",
                  r.invariant.c_str(), r.value, r.tolerance);
    os << line << (r.detail.empty() ? "" : " " + r.detail) << "\n";
    csv.row({r.invariant, r.pass ? "true" : "false", fmt(r.value), fmt(r.tolerance), r.detail});
    json v = std::isfinite(r.value) ? json(r.value) : json(nullptr);
    arr.push_back({{"invariant", r.invariant}, {"pass", r.pass}, {"value", v}, {"tolerance", r.tolerance},
                   {"detail", r.detail}});
  }
  json j = base_json(c, "verify");
  j["checks"] = arr;
  j["all_pass"] = all;
  write_json(json_out(c, o, "verify"), j);
  os << (all ? "verify: all invariants pass\n" : "verify: FAILED\n");
  return all ? kExitOk : kExitVerifyFailed;
}

int run_command(const std::string& command, const std::string& config_path, const RunOptions& o) {
  std::ostream& err = o.err ? *o.err : std::cerr;
  try {
    auto c = load_config(config_path);
    if (command == "solve") return run_solve(c, o);
    if (command == "phase") return run_phase(c, o);
    if (command == "chaos") return run_chaos(c, o);
    if (command == "simulate") return run_simulate(c, o);
    if (command == "verify") return run_verify(c, o);
    err << "error: unknown command '" << command << "'\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace pspin
