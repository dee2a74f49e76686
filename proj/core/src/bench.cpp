#include "risopt/bench.hpp"

#include "risopt/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <functional>
#include <tuple>

namespace risopt {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

constexpr std::uint64_t kDropSalt = 0x44524f50ULL;  // user-placement stream

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

// 9 significant digits: enough that parse -> re-emit reproduces the exact
// string, few enough that the files stay compact.
std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "proposed") return Scheme::proposed;
  if (s == "miso") return Scheme::miso;
  if (s == "equal-power") return Scheme::equal_power;
  if (s == "random-phase") return Scheme::random_phase;
  throw std::invalid_argument("unknown scheme: " + s);
}

ExperimentKind experiment_from_string(const std::string& s) {
  if (s == "convergence") return ExperimentKind::convergence;
  if (s == "power-sweep") return ExperimentKind::power_sweep;
  if (s == "element-sweep") return ExperimentKind::element_sweep;
  if (s == "single") return ExperimentKind::single;
  throw std::invalid_argument("unknown experiment: " + s);
}

AoStatus status_from_string(const std::string& s) {
  if (s == "converged") return AoStatus::converged;
  if (s == "max-iterations") return AoStatus::max_iterations;
  if (s == "infeasible") return AoStatus::infeasible;
  throw std::invalid_argument("unknown status: " + s);
}

struct Job {
  ExperimentKind experiment = ExperimentKind::single;
  double sweep_value = 0.0;
  Scenario scenario;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::proposed;
  bool capture_trace = false;
};

BaselineKind baseline_of(Scheme scheme) {
  switch (scheme) {
    case Scheme::miso: return BaselineKind::miso;
    case Scheme::equal_power: return BaselineKind::equal_power;
    case Scheme::random_phase: return BaselineKind::random_phase;
    case Scheme::proposed: break;
  }
  throw std::invalid_argument("baseline_of: not a baseline scheme");
}

ResultRow execute_job(const Job& job, const AoConfig& base_ao, AoTrace* trace_out) {
  const ChannelSet channels = job.scenario.make_channels(job.seed);
  AoConfig ao = base_ao;
  ao.seed = job.seed;
  ao.gamma_th = job.scenario.gamma_th;
  const Eigen::VectorXd sigma2 = job.scenario.sigma2();
  const double total_power = job.scenario.total_power;

  const auto t0 = std::chrono::steady_clock::now();
  const AoResult result = job.scheme == Scheme::proposed
                              ? run(channels, ao, total_power, sigma2)
                              : run_baseline(baseline_of(job.scheme), channels, ao,
                                             total_power, sigma2);
  double wall_ms = 0.0;
  if (ao.record_wall_time) {
    const auto d = std::chrono::steady_clock::now() - t0;
    wall_ms = std::chrono::duration<double, std::milli>(d).count();
  }
  if (trace_out != nullptr && job.capture_trace) *trace_out = result.trace;

  ResultRow row;
  row.experiment = job.experiment;
  row.sweep_value = job.sweep_value;
  row.seed = job.seed;
  row.scheme = job.scheme;
  row.sum_rate = result.final_report.sum_rate;
  row.rate = result.final_report.rate;
  row.iterations = result.outer_iterations;
  row.wall_ms = wall_ms;
  row.status = result.status;
  return row;
}

// Fan the jobs out to a worker pool and assemble rows in the canonical
// (experiment, sweep_value, seed, scheme) order.  Each worker owns its run
// end-to-end; row slots are preassigned, so scheduling cannot affect output.
ResultTable run_jobs(const RunConfig& config, const std::vector<Job>& jobs,
                     AoTrace* trace_out) {
  config.validate();
  std::vector<ResultRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) break;
      try {
        rows[i] = execute_job(jobs[i], config.ao, trace_out);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  int num_threads =
      config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
  num_threads = std::max(1, std::min<int>(num_threads, static_cast<int>(jobs.size())));
  if (num_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(num_threads);
    for (int t = 0; t < num_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::make_tuple(static_cast<int>(a.experiment), a.sweep_value, a.seed,
                           static_cast<int>(a.scheme)) <
           std::make_tuple(static_cast<int>(b.experiment), b.sweep_value, b.seed,
                           static_cast<int>(b.scheme));
  });

  ResultTable table;
  table.num_users = config.scenario.users;
  table.rows = std::move(rows);
  return table;
}

std::vector<Job> fixed_point_jobs(const RunConfig& config, ExperimentKind experiment,
                                  bool capture_trace) {
  std::vector<Job> jobs;
  const double dbm = watts_to_dbm(config.scenario.total_power);
  for (int s = 0; s < config.num_seeds; ++s) {
    for (const Scheme scheme : config.schemes) {
      Job job;
      job.experiment = experiment;
      job.sweep_value = dbm;
      job.scenario = config.scenario;
      job.seed = config.master_seed + static_cast<std::uint64_t>(s);
      job.scheme = scheme;
      job.capture_trace =
          capture_trace && s == 0 && scheme == Scheme::proposed;
      jobs.push_back(std::move(job));
    }
  }
  return jobs;
}

}  // namespace

void Scenario::validate() const {
  require(ris_elements >= 1, "Scenario: ris_elements must be >= 1");
  require(user_antennas >= 1, "Scenario: user_antennas must be >= 1");
  require(users >= 1, "Scenario: users must be >= 1");
  require(spacing_ratio > 0.0, "Scenario: spacing_ratio must be > 0");
  require(ref_gain > 0.0, "Scenario: ref_gain must be > 0");
  require(pathloss_exponent > 0.0, "Scenario: pathloss_exponent must be > 0");
  require(rician_kappa >= 0.0, "Scenario: rician_kappa must be >= 0");
  require(noise_power > 0.0, "Scenario: noise_power must be > 0");
  require(total_power > 0.0, "Scenario: total_power must be > 0");
  require(gamma_th >= 0.0, "Scenario: gamma_th must be >= 0");
  require(distance_min > 0.0 && distance_max >= distance_min,
          "Scenario: need 0 < distance_min <= distance_max");
  require(angle_max >= angle_min, "Scenario: need angle_min <= angle_max");
  require(angle_min >= -kPi / 2 && angle_max <= kPi / 2,
          "Scenario: angles must lie in [-pi/2, pi/2]");
}

ChannelSet Scenario::make_channels(std::uint64_t seed) const {
  validate();
  ArrayGeometry geometry;
  geometry.wavelength = 1.0;
  geometry.element_spacing = spacing_ratio * geometry.wavelength;
  geometry.ris_elements = ris_elements;
  geometry.user_antennas = user_antennas;

  ChannelParams params;
  params.ref_gain = ref_gain;
  params.pathloss_exponent = pathloss_exponent;
  params.rician_kappa = rician_kappa;
  params.noise_power = Eigen::VectorXd::Constant(users, noise_power);

  UserGeometry placement;
  placement.distance.resize(users);
  placement.aoa_user.resize(users);
  placement.aod_ris.resize(users);
  SplitMix64 drop(mix_seed(seed, kDropSalt));
  for (int k = 0; k < users; ++k) {
    placement.distance(k) = drop.next_uniform(distance_min, distance_max);
    placement.aoa_user(k) = drop.next_uniform(angle_min, angle_max);
    placement.aod_ris(k) = drop.next_uniform(angle_min, angle_max);
  }
  return synthesize_channels(geometry, params, placement, seed);
}

Eigen::VectorXd Scenario::sigma2() const {
  return Eigen::VectorXd::Constant(users, noise_power);
}

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::power_sweep: return "power-sweep";
    case ExperimentKind::element_sweep: return "element-sweep";
    case ExperimentKind::single: return "single";
  }
  return "unknown";
}

const char* to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::proposed: return "proposed";
    case Scheme::miso: return "miso";
    case Scheme::equal_power: return "equal-power";
    case Scheme::random_phase: return "random-phase";
  }
  return "unknown";
}

void RunConfig::validate() const {
  scenario.validate();
  ao.validate();
  require(num_seeds >= 1, "RunConfig: num_seeds must be >= 1");
  require(threads >= 0, "RunConfig: threads must be >= 0");
  require(!schemes.empty(), "RunConfig: schemes must be non-empty");
  require(!power_grid_dbm.empty(), "RunConfig: power grid must be non-empty");
  require(std::adjacent_find(power_grid_dbm.begin(), power_grid_dbm.end(),
                             std::greater_equal<>()) == power_grid_dbm.end(),
          "RunConfig: power grid must be strictly ascending");
  require(!element_grid.empty(), "RunConfig: element grid must be non-empty");
  require(std::adjacent_find(element_grid.begin(), element_grid.end(),
                             std::greater_equal<>()) == element_grid.end(),
          "RunConfig: element grid must be strictly ascending");
  require(element_grid.front() >= 1, "RunConfig: element grid entries must be >= 1");
}

ResultTable run_single(const RunConfig& config) {
  return run_jobs(config, fixed_point_jobs(config, ExperimentKind::single, false), nullptr);
}

ConvergenceOutput run_convergence(const RunConfig& config) {
  ConvergenceOutput out;
  out.table = run_jobs(config, fixed_point_jobs(config, ExperimentKind::convergence, true),
                       &out.trace);
  return out;
}

ResultTable run_power_sweep(const RunConfig& config) {
  std::vector<Job> jobs;
  for (const double dbm : config.power_grid_dbm) {
    for (int s = 0; s < config.num_seeds; ++s) {
      for (const Scheme scheme : config.schemes) {
        Job job;
        job.experiment = ExperimentKind::power_sweep;
        job.sweep_value = dbm;
        job.scenario = config.scenario;
        job.scenario.total_power = dbm_to_watts(dbm);
        job.seed = config.master_seed + static_cast<std::uint64_t>(s);
        job.scheme = scheme;
        jobs.push_back(std::move(job));
      }
    }
  }
  return run_jobs(config, jobs, nullptr);
}

ResultTable run_element_sweep(const RunConfig& config) {
  std::vector<Job> jobs;
  for (const int elements : config.element_grid) {
    for (int s = 0; s < config.num_seeds; ++s) {
      for (const Scheme scheme : config.schemes) {
        Job job;
        job.experiment = ExperimentKind::element_sweep;
        job.sweep_value = static_cast<double>(elements);
        job.scenario = config.scenario;
        job.scenario.ris_elements = elements;
        job.seed = config.master_seed + static_cast<std::uint64_t>(s);
        job.scheme = scheme;
        jobs.push_back(std::move(job));
      }
    }
  }
  return run_jobs(config, jobs, nullptr);
}

void emit_csv(const ResultTable& table, std::ostream& os) {
  os << "experiment,sweep_value,seed,scheme,sum_rate";
  for (int k = 1; k <= table.num_users; ++k) os << ",rate_" << k;
  os << ",iters,wall_ms,status\n";
  for (const ResultRow& row : table.rows) {
    require(row.rate.size() == table.num_users,
            "emit_csv: per-user rate length does not match num_users");
    os << to_string(row.experiment) << ',' << fmt9(row.sweep_value) << ',' << row.seed << ','
       << to_string(row.scheme) << ',' << fmt9(row.sum_rate);
    for (int k = 0; k < table.num_users; ++k) os << ',' << fmt9(row.rate(k));
    os << ',' << row.iterations << ',' << fmt9(row.wall_ms) << ',' << to_string(row.status)
       << '\n';
  }
}

void emit_jsonl(const ResultTable& table, std::ostream& os) {
  for (const ResultRow& row : table.rows) {
    nlohmann::ordered_json j;
    j["experiment"] = to_string(row.experiment);
    j["sweep_value"] = row.sweep_value;
    j["seed"] = row.seed;
    j["scheme"] = to_string(row.scheme);
    j["sum_rate"] = row.sum_rate;
    std::vector<double> rates(row.rate.data(), row.rate.data() + row.rate.size());
    j["rate"] = rates;
    j["iters"] = row.iterations;
    j["wall_ms"] = row.wall_ms;
    j["status"] = to_string(row.status);
    os << j.dump() << '\n';
  }
}

void emit_file(const ResultTable& table, const std::string& path, const std::string& format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  if (format == "csv") {
    emit_csv(table, out);
  } else if (format == "jsonl") {
    emit_jsonl(table, out);
  } else {
    throw std::invalid_argument("unknown output format: " + format);
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

ResultTable parse_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), "parse_csv: missing header");
  const std::vector<std::string> header = split_line(line);
  require(header.size() >= 8, "parse_csv: header too short");
  const std::vector<std::string> prefix = {"experiment", "sweep_value", "seed", "scheme",
                                           "sum_rate"};
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    require(header[i] == prefix[i], "parse_csv: unexpected header column " + header[i]);
  }
  const std::size_t tail = header.size() - 3;
  require(header[tail] == "iters" && header[tail + 1] == "wall_ms" &&
              header[tail + 2] == "status",
          "parse_csv: unexpected trailing header columns");
  const int num_users = static_cast<int>(tail - prefix.size());
  for (int k = 0; k < num_users; ++k) {
    require(header[prefix.size() + k] == "rate_" + std::to_string(k + 1),
            "parse_csv: unexpected rate column " + header[prefix.size() + k]);
  }

  ResultTable table;
  table.num_users = num_users;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_line(line);
    require(f.size() == header.size(), "parse_csv: wrong field count in row: " + line);
    ResultRow row;
    row.experiment = experiment_from_string(f[0]);
    row.sweep_value = std::stod(f[1]);
    row.seed = std::stoull(f[2]);
    row.scheme = scheme_from_string(f[3]);
    row.sum_rate = std::stod(f[4]);
    row.rate.resize(num_users);
    for (int k = 0; k < num_users; ++k) row.rate(k) = std::stod(f[5 + k]);
    row.iterations = std::stoi(f[5 + num_users]);
    row.wall_ms = std::stod(f[6 + num_users]);
    row.status = status_from_string(f[7 + num_users]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

void emit_trace_csv(const AoTrace& trace, int num_users, std::ostream& os) {
  os << "iter,sum_rate";
  for (int k = 1; k <= num_users; ++k) os << ",rate_" << k;
  for (int k = 1; k <= num_users; ++k) os << ",sinr_" << k;
  os << ",inner_f,inner_w,p2_obj,p3_obj,p4_obj,wall_ms\n";
  auto opt = [](double v) { return std::isnan(v) ? std::string() : fmt9(v); };
  for (const AoIterationRecord& rec : trace.iterations) {
    require(rec.rate.size() == num_users && rec.sinr.size() == num_users,
            "emit_trace_csv: record width does not match num_users");
    os << rec.outer << ',' << fmt9(rec.sum_rate);
    for (int k = 0; k < num_users; ++k) os << ',' << fmt9(rec.rate(k));
    for (int k = 0; k < num_users; ++k) os << ',' << fmt9(rec.sinr(k));
    os << ',' << rec.inner_f_iterations << ',' << rec.inner_w_iterations << ','
       << opt(rec.p2_objective) << ',' << opt(rec.p3_objective) << ','
       << opt(rec.p4_objective) << ',' << fmt9(rec.wall_ms) << '\n';
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in,
                                /*cb=*/nullptr, /*allow_exceptions=*/true,
                                /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  require(doc.is_object(), "config must be a flat JSON object: " + path);

  RunConfig config;
  for (const auto& [key, value] : doc.items()) {
    try {
      // Scenario.
      if (key == "ris_elements") config.scenario.ris_elements = value.get<int>();
      else if (key == "user_antennas") config.scenario.user_antennas = value.get<int>();
      else if (key == "users") config.scenario.users = value.get<int>();
      else if (key == "spacing_ratio") config.scenario.spacing_ratio = value.get<double>();
      else if (key == "ref_gain") config.scenario.ref_gain = value.get<double>();
      else if (key == "ref_gain_db") config.scenario.ref_gain = db_to_linear(value.get<double>());
      else if (key == "pathloss_exponent")
        config.scenario.pathloss_exponent = value.get<double>();
      else if (key == "rician_kappa") config.scenario.rician_kappa = value.get<double>();
      else if (key == "noise_power") config.scenario.noise_power = value.get<double>();
      else if (key == "noise_power_dbm")
        config.scenario.noise_power = dbm_to_watts(value.get<double>());
      else if (key == "total_power") config.scenario.total_power = value.get<double>();
      else if (key == "total_power_dbm")
        config.scenario.total_power = dbm_to_watts(value.get<double>());
      else if (key == "gamma_th") config.scenario.gamma_th = value.get<double>();
      else if (key == "distance_min") config.scenario.distance_min = value.get<double>();
      else if (key == "distance_max") config.scenario.distance_max = value.get<double>();
      else if (key == "angle_min") config.scenario.angle_min = value.get<double>();
      else if (key == "angle_max") config.scenario.angle_max = value.get<double>();
      // Alternating-loop knobs.
      else if (key == "eps_outer") config.ao.eps_outer = value.get<double>();
      else if (key == "eps_f") config.ao.eps_f = value.get<double>();
      else if (key == "eps_w") config.ao.eps_w = value.get<double>();
      else if (key == "max_outer") config.ao.max_outer = value.get<int>();
      else if (key == "max_inner_f") config.ao.max_inner_f = value.get<int>();
      else if (key == "max_inner_w") config.ao.max_inner_w = value.get<int>();
      else if (key == "delta_rule") {
        const std::string rule = value.get<std::string>();
        if (rule == "abs-sum") config.ao.delta_rule = DeltaRule::abs_sum;
        else if (rule == "signed-sum") config.ao.delta_rule = DeltaRule::signed_sum;
        else throw std::invalid_argument("unknown delta_rule: " + rule);
      } else if (key == "record_wall_time")
        config.ao.record_wall_time = value.get<bool>();
      // Experiment plumbing.
      else if (key == "experiment")
        config.experiment = experiment_from_string(value.get<std::string>());
      else if (key == "power_grid_dbm")
        config.power_grid_dbm = value.get<std::vector<double>>();
      else if (key == "element_grid")
        config.element_grid = value.get<std::vector<int>>();
      else if (key == "num_seeds") config.num_seeds = value.get<int>();
      else if (key == "master_seed") config.master_seed = value.get<std::uint64_t>();
      else if (key == "schemes") {
        config.schemes.clear();
        for (const auto& name : value.get<std::vector<std::string>>()) {
          config.schemes.push_back(scheme_from_string(name));
        }
      } else if (key == "threads")
        config.threads = value.get<int>();
      else
        throw std::invalid_argument("unknown config key: " + key);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("config key '" + key + "' in " + path +
                               " has the wrong type: " + e.what());
    }
  }

  // The QoS threshold is a scenario parameter; the loop reads it from there.
  config.ao.gamma_th = config.scenario.gamma_th;
  config.validate();
  return config;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

}  // namespace risopt
