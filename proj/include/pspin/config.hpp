#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pspin/finite_temp.hpp"
#include "pspin/mixture.hpp"
#include "pspin/zero_temp.hpp"

namespace pspin {

struct ChaosConfig {
  std::vector<double> t_grid;
  int quad_points = 32;
};

struct FiniteTempConfig {
  std::vector<double> betas;
  int k = 2;
  KrsbOptions krsb;
};

struct McConfig {
  std::vector<std::string> experiments;  // ground_state | coupled | variance_identity | superconcentration | clt
  std::vector<int> N_list;
  int seeds = 20;
  std::uint64_t seed_offset = 0;
  int restarts = 4;
  int max_iters = 20000;
  double grad_tol = 1e-9;
  std::vector<double> t_values;  // coupled runs
  int t_points = 8;              // variance identity quadrature
  int clt_samples = 200;
  double cap = 2e7;
  int max_p = 4;
  std::map<int, int> max_N{{2, 300}, {3, 60}, {4, 40}};
};

struct VerifyConfig {
  int random_points = 20;
  std::uint64_t seed = 7;
};

struct ExperimentConfig {
  std::string name;
  std::string source;  // path the config was read from
  Mixture mixture;
  SolverOptions solver;
  std::optional<ChaosConfig> chaos;
  std::optional<FiniteTempConfig> finite_temp;
  std::optional<McConfig> mc;
  VerifyConfig verify;
  // empty: <name>_<command>.csv / .json in the output directory
  std::string csv_path;
  std::string json_path;
};

// ConfigError messages carry "path:line:col: field: reason"
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");

}  // namespace pspin
