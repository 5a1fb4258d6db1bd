#include "pspin/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "pspin/errors.hpp"

namespace pspin {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& field, const std::string& why) const {
    std::ostringstream os;
    os << source_;
    if (n.IsDefined() && n.Mark().line >= 0) os << ':' << n.Mark().line + 1 << ':' << n.Mark().column + 1;
    os << ": field '" << field << "': " << why;
    throw ConfigError(os.str());
  }

  template <class T>
  T get(const YAML::Node& parent, const std::string& key, const std::string& field, T fallback) const {
    YAML::Node n = parent[key];
    if (!n.IsDefined() || n.IsNull()) return fallback;
    return as<T>(n, field);
  }

  template <class T>
  T as(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected a scalar");
    try {
      T v = n.as<T>();
      if constexpr (std::is_floating_point_v<T>)
        if (!std::isfinite(v)) fail(n, field, "must be finite");
      return v;
    } catch (const YAML::BadConversion&) {
      fail(n, field, "cannot convert '" + n.Scalar() + "'");
    }
  }

  template <class T>
  std::vector<T> list(const YAML::Node& parent, const std::string& key, const std::string& field) const {
    std::vector<T> out;
    YAML::Node n = parent[key];
    if (!n.IsDefined() || n.IsNull()) return out;
    if (!n.IsSequence()) fail(n, field, "expected a list");
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(as<T>(n[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }

  void known_keys(const YAML::Node& n, const std::string& field, std::set<std::string> keys) const {
    if (!n.IsMap()) fail(n, field, "expected a mapping");
    for (auto it = n.begin(); it != n.end(); ++it) {
      auto k = it->first.as<std::string>();
      if (!keys.count(k)) fail(it->first, field.empty() ? k : field + "." + k, "unknown key");
    }
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

Mixture read_mixture(const Reader& r, const YAML::Node& root) {
  YAML::Node mx = root["mixture"];
  if (!mx.IsDefined()) r.fail(root, "mixture", "required");
  if (!mx.IsSequence()) r.fail(mx, "mixture", "expected a list of {p, gamma} or {p, gamma_sq}");
  if (mx.size() == 0) r.fail(mx, "mixture", "needs at least one positive gamma_p");
  std::map<int, double> gamma;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    std::string f = "mixture[" + std::to_string(i) + "]";
    YAML::Node e = mx[i];
    r.known_keys(e, f, {"p", "gamma", "gamma_sq"});
    if (!e["p"].IsDefined()) r.fail(e, f + ".p", "required");
    int p = r.as<int>(e["p"], f + ".p");
    if (p < 2) r.fail(e["p"], f + ".p", "degree must be >= 2, got " + std::to_string(p));
    bool has_g = e["gamma"].IsDefined(), has_sq = e["gamma_sq"].IsDefined();
    if (has_g == has_sq) r.fail(e, f, "give exactly one of gamma, gamma_sq");
    double g;
    if (has_g) {
      g = r.as<double>(e["gamma"], f + ".gamma");
      if (g < 0.0) r.fail(e["gamma"], f + ".gamma", "must be >= 0");
    } else {
      double sq = r.as<double>(e["gamma_sq"], f + ".gamma_sq");
      if (sq < 0.0) r.fail(e["gamma_sq"], f + ".gamma_sq", "must be >= 0");
      g = std::sqrt(sq);
    }
    if (gamma.count(p)) r.fail(e["p"], f + ".p", "duplicate degree " + std::to_string(p));
    gamma[p] = g;
  }
  double h = r.get<double>(root, "h", "h", 0.0);
  if (h < 0.0) r.fail(root["h"], "h", "must be >= 0");
  bool any = false;
  for (auto [p, g] : gamma) any = any || g > 0.0;
  if (!any) r.fail(mx, "mixture", "needs at least one positive gamma_p");
  return Mixture(gamma, h);
}

std::vector<double> read_grid(const Reader& r, const YAML::Node& n, const std::string& field) {
  if (n.IsSequence()) {
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(r.as<double>(n[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }
  if (n.IsMap()) {
    r.known_keys(n, field, {"start", "stop", "count"});
    double a = r.get<double>(n, "start", field + ".start", 0.05);
    double b = r.get<double>(n, "stop", field + ".stop", 0.95);
    int c = r.get<int>(n, "count", field + ".count", 19);
    if (c < 1) r.fail(n, field + ".count", "must be >= 1");
    std::vector<double> out;
    for (int i = 0; i < c; ++i) out.push_back(c == 1 ? a : a + (b - a) * i / (c - 1));
    return out;
  }
  r.fail(n, field, "expected a list or {start, stop, count}");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                      ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError(source + ": top level must be a mapping");
  r.known_keys(root, "", {"name", "mixture", "h", "solver", "chaos", "finite_temp", "mc", "verify", "output"});

  ExperimentConfig c;
  c.source = source;
  c.name = r.get<std::string>(root, "name", "name", "experiment");
  c.mixture = read_mixture(r, root);

  if (YAML::Node s = root["solver"]; s.IsDefined()) {
    r.known_keys(s, "solver", {"grid_size", "tol", "max_iters", "margin"});
    int gs = r.get<int>(s, "grid_size", "solver.grid_size", 1000);
    if (gs < 50) r.fail(s["grid_size"], "solver.grid_size", "must be >= 50");
    c.solver.grid_size = static_cast<std::size_t>(gs);
    c.solver.tol = r.get<double>(s, "tol", "solver.tol", c.solver.tol);
    if (!(c.solver.tol > 0.0)) r.fail(s["tol"], "solver.tol", "must be > 0");
    c.solver.max_iters = r.get<int>(s, "max_iters", "solver.max_iters", c.solver.max_iters);
    if (c.solver.max_iters < 1) r.fail(s["max_iters"], "solver.max_iters", "must be >= 1");
    // the sign of the margin is a solver invariant, reported by the run rather than rejected here
    c.solver.margin = r.get<double>(s, "margin", "solver.margin", c.solver.margin);
  }

  if (YAML::Node s = root["chaos"]; s.IsDefined()) {
    r.known_keys(s, "chaos", {"t_grid", "quad_points"});
    ChaosConfig cc;
    if (s["t_grid"].IsDefined()) {
      cc.t_grid = read_grid(r, s["t_grid"], "chaos.t_grid");
    } else {
      for (int i = 1; i < 20; ++i) cc.t_grid.push_back(0.05 * i);
    }
    for (std::size_t i = 0; i < cc.t_grid.size(); ++i)
      if (!(cc.t_grid[i] > 0.0 && cc.t_grid[i] < 1.0))
        r.fail(s["t_grid"], "chaos.t_grid[" + std::to_string(i) + "]", "t must lie in (0,1)");
    cc.quad_points = r.get<int>(s, "quad_points", "chaos.quad_points", 32);
    if (cc.quad_points < 1) r.fail(s["quad_points"], "chaos.quad_points", "must be >= 1");
    c.chaos = cc;
  }

  if (YAML::Node s = root["finite_temp"]; s.IsDefined()) {
    r.known_keys(s, "finite_temp", {"betas", "k", "restarts", "tol", "max_iters", "seed"});
    FiniteTempConfig f;
    f.betas = r.list<double>(s, "betas", "finite_temp.betas");
    if (f.betas.empty()) r.fail(s, "finite_temp.betas", "needs at least one beta");
    for (std::size_t i = 0; i < f.betas.size(); ++i)
      if (!(f.betas[i] > 0.0)) r.fail(s["betas"][i], "finite_temp.betas[" + std::to_string(i) + "]", "must be > 0");
    f.k = r.get<int>(s, "k", "finite_temp.k", 2);
    if (f.k < 1) r.fail(s["k"], "finite_temp.k", "must be >= 1");
    f.krsb.restarts = r.get<int>(s, "restarts", "finite_temp.restarts", f.krsb.restarts);
    if (f.krsb.restarts < 1) r.fail(s["restarts"], "finite_temp.restarts", "must be >= 1");
    f.krsb.tol = r.get<double>(s, "tol", "finite_temp.tol", f.krsb.tol);
    f.krsb.max_iters = r.get<int>(s, "max_iters", "finite_temp.max_iters", f.krsb.max_iters);
    f.krsb.seed = r.get<unsigned long long>(s, "seed", "finite_temp.seed", f.krsb.seed);
    c.finite_temp = f;
  }

  if (YAML::Node s = root["mc"]; s.IsDefined()) {
    r.known_keys(s, "mc", {"experiments", "N_list", "seeds", "seed_offset", "restarts", "max_iters", "grad_tol", "t",
                           "t_points", "clt_samples", "cap", "max_p", "max_N"});
    McConfig mc;
    static const std::set<std::string> kinds{"ground_state", "coupled", "variance_identity", "superconcentration",
                                             "clt"};
    mc.experiments = r.list<std::string>(s, "experiments", "mc.experiments");
    if (mc.experiments.empty()) mc.experiments = {"ground_state"};
    for (std::size_t i = 0; i < mc.experiments.size(); ++i)
      if (!kinds.count(mc.experiments[i]))
        r.fail(s["experiments"][i], "mc.experiments[" + std::to_string(i) + "]",
               "unknown experiment '" + mc.experiments[i] + "'");
    mc.N_list = r.list<int>(s, "N_list", "mc.N_list");
    if (mc.N_list.empty()) r.fail(s, "mc.N_list", "needs at least one N");
    for (std::size_t i = 0; i < mc.N_list.size(); ++i)
      if (mc.N_list[i] < 2) r.fail(s["N_list"][i], "mc.N_list[" + std::to_string(i) + "]", "N must be >= 2");
    mc.seeds = r.get<int>(s, "seeds", "mc.seeds", mc.seeds);
    if (mc.seeds < 1) r.fail(s["seeds"], "mc.seeds", "must be >= 1");
    mc.seed_offset = r.get<std::uint64_t>(s, "seed_offset", "mc.seed_offset", 0);
    mc.restarts = r.get<int>(s, "restarts", "mc.restarts", mc.restarts);
    if (mc.restarts < 1) r.fail(s["restarts"], "mc.restarts", "must be >= 1");
    mc.max_iters = r.get<int>(s, "max_iters", "mc.max_iters", mc.max_iters);
    mc.grad_tol = r.get<double>(s, "grad_tol", "mc.grad_tol", mc.grad_tol);
    mc.t_values = r.list<double>(s, "t", "mc.t");
    for (std::size_t i = 0; i < mc.t_values.size(); ++i)
      if (!(mc.t_values[i] >= 0.0 && mc.t_values[i] <= 1.0))
        r.fail(s["t"][i], "mc.t[" + std::to_string(i) + "]", "t must lie in [0,1]");
    mc.t_points = r.get<int>(s, "t_points", "mc.t_points", mc.t_points);
    if (mc.t_points < 1) r.fail(s["t_points"], "mc.t_points", "must be >= 1");
    mc.clt_samples = r.get<int>(s, "clt_samples", "mc.clt_samples", mc.clt_samples);
    mc.cap = r.get<double>(s, "cap", "mc.cap", mc.cap);
    if (!(mc.cap > 0.0)) r.fail(s["cap"], "mc.cap", "must be > 0");
    mc.max_p = r.get<int>(s, "max_p", "mc.max_p", mc.max_p);
    if (YAML::Node mn = s["max_N"]; mn.IsDefined()) {
      if (!mn.IsMap()) r.fail(mn, "mc.max_N", "expected a mapping p: N");
      for (auto it = mn.begin(); it != mn.end(); ++it) {
        int p = r.as<int>(it->first, "mc.max_N");
        mc.max_N[p] = r.as<int>(it->second, "mc.max_N." + std::to_string(p));
      }
    }
    // desk caps and the scalar cap are module preconditions; reject before any sampling
    int pmax = c.mixture.max_degree();
    if (pmax > mc.max_p)
      r.fail(root["mixture"], "mixture", "degree p=" + std::to_string(pmax) + " exceeds mc.max_p=" + std::to_string(mc.max_p));
    for (std::size_t i = 0; i < mc.N_list.size(); ++i) {
      int N = mc.N_list[i];
      double total = 0.0;
      for (auto [p, g] : c.mixture.gamma()) {
        auto lim = mc.max_N.find(p);
        if (lim != mc.max_N.end() && N > lim->second)
          r.fail(s["N_list"][i], "mc.N_list[" + std::to_string(i) + "]",
                 "N=" + std::to_string(N) + " exceeds the cap " + std::to_string(lim->second) + " for p=" +
                     std::to_string(p));
        total += std::pow(static_cast<double>(N), p);
        if (total > mc.cap)
          r.fail(s["N_list"][i], "mc.N_list[" + std::to_string(i) + "]",
                 "disorder for p=" + std::to_string(p) + " at N=" + std::to_string(N) + " exceeds mc.cap");
      }
    }
    bool coupled = false;
    for (auto& e : mc.experiments) coupled = coupled || e == "coupled" || e == "variance_identity";
    if (coupled && !c.mixture.is_even())
      r.fail(root["mixture"], "mixture", "coupled experiments require an even mixture (odd gamma_p present)");
    if (coupled && std::find(mc.experiments.begin(), mc.experiments.end(), "coupled") != mc.experiments.end() &&
        mc.t_values.empty())
      r.fail(s, "mc.t", "coupled experiment needs at least one t");
    for (auto& e : mc.experiments) {
      if (e == "variance_identity" && mc.seeds < 2) r.fail(s["seeds"], "mc.seeds", "variance identity needs >= 2 seeds");
      if (e == "superconcentration" && c.mixture.h() != 0.0)
        r.fail(root["h"], "h", "superconcentration requires h = 0");
      if (e == "clt") {
        if (c.mixture.h() == 0.0) r.fail(root["h"], "h", "clt requires h > 0 (chi = 0 at h = 0)");
        if (!c.mixture.is_even()) r.fail(root["mixture"], "mixture", "clt requires an even mixture");
        if (mc.clt_samples < 2) r.fail(s["clt_samples"], "mc.clt_samples", "must be >= 2");
      }
    }
    c.mc = mc;
  }

  if (YAML::Node s = root["verify"]; s.IsDefined()) {
    r.known_keys(s, "verify", {"random_points", "seed"});
    c.verify.random_points = r.get<int>(s, "random_points", "verify.random_points", c.verify.random_points);
    c.verify.seed = r.get<std::uint64_t>(s, "seed", "verify.seed", c.verify.seed);
  }

  if (YAML::Node s = root["output"]; s.IsDefined()) {
    r.known_keys(s, "output", {"csv_path", "json_path"});
    c.csv_path = r.get<std::string>(s, "csv_path", "output.csv_path", c.csv_path);
    c.json_path = r.get<std::string>(s, "json_path", "output.json_path", c.json_path);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace pspin
