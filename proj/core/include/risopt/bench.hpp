#pragma once

#include "risopt/ao.hpp"

#include <iosfwd>
#include <string>

namespace risopt {

// Batch experiment layer: scenario sampling, scheme fan-out over seeds and
// sweep grids, and CSV / JSON-lines emission.

// Everything needed to sample one Monte-Carlo drop.  Users are placed
// uniformly in a ring: distance U[distance_min, distance_max] meters, angles
// U[angle_min, angle_max] radians on both ends of the link.
struct Scenario {
  int ris_elements = 30;
  int user_antennas = 4;
  int users = 3;
  double spacing_ratio = 0.5;       // element spacing / wavelength
  double ref_gain = 1e-3;           // linear, at 1 m
  double pathloss_exponent = 2.2;
  double rician_kappa = 3.0;
  double noise_power = 1e-8;        // watts per user
  double total_power = 1.5848931924611134e-4;  // watts (-8 dBm)
  double gamma_th = 0.1;
  double distance_min = 20.0;       // meters
  double distance_max = 60.0;
  double angle_min = -1.0471975511965976;  // -pi/3
  double angle_max = 1.0471975511965976;   // +pi/3

  void validate() const;
  ChannelSet make_channels(std::uint64_t seed) const;
  Eigen::VectorXd sigma2() const;
};

enum class ExperimentKind { convergence, power_sweep, element_sweep, single };
enum class Scheme { proposed, miso, equal_power, random_phase };

const char* to_string(ExperimentKind kind);
const char* to_string(Scheme scheme);

struct RunConfig {
  Scenario scenario;
  AoConfig ao;
  ExperimentKind experiment = ExperimentKind::single;
  std::vector<double> power_grid_dbm = {-14, -12, -10, -8, -6, -4, -2};
  std::vector<int> element_grid = {10, 20, 30, 40};
  int num_seeds = 1;
  std::uint64_t master_seed = 1;
  std::vector<Scheme> schemes = {Scheme::proposed, Scheme::miso, Scheme::equal_power,
                                 Scheme::random_phase};
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

struct ResultRow {
  ExperimentKind experiment = ExperimentKind::single;
  double sweep_value = 0.0;  // P_t in dBm for power rows, M for element rows
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::proposed;
  double sum_rate = 0.0;
  Eigen::VectorXd rate;
  int iterations = 0;
  double wall_ms = 0.0;
  AoStatus status = AoStatus::infeasible;
};

struct ResultTable {
  int num_users = 0;  // fixes the rate_1..rate_K column count
  std::vector<ResultRow> rows;
};

struct ConvergenceOutput {
  ResultTable table;
  AoTrace trace;  // proposed scheme, first seed
};

// Every scheme at a given (sweep value, seed) sees the identical ChannelSet,
// so cross-scheme comparisons are paired.  Rows are sorted by
// (experiment, sweep_value, seed, scheme); failed rows are kept and flagged.
ResultTable run_single(const RunConfig& config);
ConvergenceOutput run_convergence(const RunConfig& config);
ResultTable run_power_sweep(const RunConfig& config);
ResultTable run_element_sweep(const RunConfig& config);

// CSV columns: experiment, sweep_value, seed, scheme, sum_rate,
// rate_1..rate_K, iters, wall_ms, status.  Numbers carry 9 significant
// digits, so parse_csv() followed by emit_csv() is byte-identical.
void emit_csv(const ResultTable& table, std::ostream& os);
void emit_jsonl(const ResultTable& table, std::ostream& os);
void emit_file(const ResultTable& table, const std::string& path, const std::string& format);
ResultTable parse_csv(std::istream& is);

// Convergence trace: iter, sum_rate, rate_k..., sinr_k..., inner_f, inner_w,
// p2_obj, p3_obj, p4_obj, wall_ms (blank fields where a block was not run).
void emit_trace_csv(const AoTrace& trace, int num_users, std::ostream& os);

// Flat key-value JSON config; *_db / *_dbm keys are converted to linear
// scale while parsing.  Unknown keys are an error (catches typos).
RunConfig load_run_config(const std::string& path);

double db_to_linear(double db);
double dbm_to_watts(double dbm);

}  // namespace risopt
