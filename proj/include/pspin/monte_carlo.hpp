#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "pspin/mixture.hpp"

namespace pspin {

// Purpose tags for disjoint PRNG streams
enum class Stream : std::uint64_t { Disorder = 1, Common = 2, Independent1 = 3, Independent2 = 4, Starts = 16 };

// Counter-based generator: element i of the stream keyed by (seed, tag, sub) is a pure function of i.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t tag, std::uint64_t sub);
  std::uint64_t bits(std::uint64_t counter) const;
  // uniform on (0, 1]
  double uniform(std::uint64_t counter) const;
  // standard normal; elements 2j and 2j+1 share one Box-Muller pair
  double normal(std::uint64_t index) const;
  void normals(std::vector<double>& out) const;

 private:
  std::uint64_t key_;
};

struct DisorderSample {
  int N = 0;
  std::uint64_t seed = 0;
  std::uint64_t tag = 0;
  std::map<int, std::vector<double>> tensors;  // row-major g_{i_1..i_p}
};

inline constexpr double kDefaultScalarCap = 2e7;

DisorderSample sample_disorder(const Mixture& m, int N, std::uint64_t seed,
                               Stream tag = Stream::Disorder, double cap = kDefaultScalarCap);

// H(sigma) = sum_c weight_c X_c(sigma) + h sum sigma_i
struct Hamiltonian {
  const Mixture* mixture = nullptr;
  std::vector<std::pair<double, const DisorderSample*>> parts;
  int N() const { return parts.front().second->N; }
  double energy(const std::vector<double>& sigma) const;
  double energy_grad(const std::vector<double>& sigma, std::vector<double>& grad) const;
};

// pure X_N + h term for one sample
double eval_energy(const DisorderSample& d, const Mixture& m, const std::vector<double>& sigma);

struct AscentOptions {
  int restarts = 4;
  int max_iters = 20000;
  double grad_tol = 1e-9;
  std::uint64_t start_seed = 0;
  std::uint64_t start_stream = 0;  // sub-stream selector for the starts
};

struct GroundStateResult {
  std::vector<double> sigma;
  double energy = 0.0;
  double energy_per_site = 0.0;
  int restarts = 0;
  int best_restart = 0;
  bool converged = false;
  double grad_norm = 0.0;  // |tangent gradient| / sqrt(N)
  int iterations = 0;
};

GroundStateResult ground_state(const Hamiltonian& H, const AscentOptions& opt);
GroundStateResult ground_state(const DisorderSample& d, const Mixture& m, const AscentOptions& opt);

// N lambda_max / 2 for the symmetrized SK matrix, by shifted power iteration
double sk_eigen_oracle(const DisorderSample& d, const Mixture& m, double tol = 1e-12);

struct CoupledResult {
  double overlap = 0.0;  // |R| when h = 0
  double raw_overlap = 0.0;
  double L1 = 0.0;
  double L2 = 0.0;
  bool converged = false;
};

CoupledResult coupled_ground_states(const Mixture& m, int N, double t, std::uint64_t seed,
                                    const AscentOptions& opt, double cap = kDefaultScalarCap);

struct VarianceIdentity {
  double var_direct = 0.0;
  double var_via_identity = 0.0;
  double se_direct = 0.0;
  double se_identity = 0.0;
  double z_score = 0.0;
  std::vector<double> t_nodes;
  std::vector<double> mean_xi_R;  // per t node
  std::vector<double> L_values;
  std::vector<std::vector<double>> R;  // raw overlap per seed, per t node
};

struct McOptions {
  AscentOptions ascent;
  int threads = 1;
  double cap = kDefaultScalarCap;
};

std::vector<std::uint64_t> seed_list(int n, std::uint64_t offset);

// one ground state per seed (disorder stream), parallel over seeds
std::vector<GroundStateResult> ground_state_runs(const Mixture& m, int N, const std::vector<std::uint64_t>& seeds,
                                                const McOptions& opt);
std::vector<CoupledResult> coupled_runs(const Mixture& m, int N, double t, const std::vector<std::uint64_t>& seeds,
                                        const McOptions& opt);
// energies of ground_state_runs
std::vector<double> ground_state_sample(const Mixture& m, int N, const std::vector<std::uint64_t>& seeds,
                                        const McOptions& opt);

VarianceIdentity variance_identity_check(const Mixture& m, int N, const std::vector<std::uint64_t>& seeds,
                                         int t_points, const McOptions& opt);

struct SuperRow {
  int N;
  double var_over_N;
  double stderr_;
};

std::vector<SuperRow> superconcentration_trend(const Mixture& m, const std::vector<int>& N_list,
                                               const std::vector<std::uint64_t>& seeds, const McOptions& opt);
SuperRow super_row(int N, const std::vector<double>& L);
bool trend_nonincreasing(const std::vector<SuperRow>& rows);

struct CltResult {
  double ks_distance = 0.0;
  double chi_used = 0.0;
  double sd_W = 0.0;
  double ks_raw = 0.0;  // raw L_N against N(0,1), a normalization control
  std::vector<double> W;
  std::vector<double> L;
};

CltResult clt_check(const Mixture& m, int N, const std::vector<std::uint64_t>& seeds, double chi,
                    const McOptions& opt);

}  // namespace pspin
