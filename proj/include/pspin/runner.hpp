#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pspin/config.hpp"

namespace pspin {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,        // config, validation or precondition failure
  kExitNotConverged = 2,  // solver gave up; best iterate written
  kExitVerifyFailed = 3,  // at least one invariant failed
  kExitIo = 4,
};

struct RunOptions {
  std::string out_dir;  // empty: PSPIN_OUT_DIR, else the working directory
  int threads = 1;
  std::uint64_t seed_offset = 0;
  std::ostream* out = nullptr;  // null: std::cout
  std::ostream* err = nullptr;  // null: std::cerr
};

// fixed CSV headers, part of the output schema
extern const std::vector<std::string> kSolveCsvHeader;
extern const std::vector<std::string> kSweepCsvHeader;
extern const std::vector<std::string> kChaosCsvHeader;
extern const std::vector<std::string> kSimulateCsvHeader;
extern const std::vector<std::string> kOverlapCsvHeader;
extern const std::vector<std::string> kVerifyCsvHeader;

struct CheckRow {
  std::string invariant;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

// invariants of one experiment config; never throws for numerical failures, they become failed rows
std::vector<CheckRow> verify_checks(const ExperimentConfig& c, int threads = 1);

int run_solve(const ExperimentConfig& c, const RunOptions& o);
int run_phase(const ExperimentConfig& c, const RunOptions& o);
int run_chaos(const ExperimentConfig& c, const RunOptions& o);
int run_simulate(const ExperimentConfig& c, const RunOptions& o);
int run_verify(const ExperimentConfig& c, const RunOptions& o);

// loads the config, dispatches and maps errors to exit codes
int run_command(const std::string& command, const std::string& config_path, const RunOptions& o);

// RFC 4180 field quoting
std::string csv_field(const std::string& s);
std::string csv_number(double v);

}  // namespace pspin
