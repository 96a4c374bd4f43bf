#include "xtalk/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xtalk/characterization.hpp"
#include "xtalk/circuit.hpp"
#include "xtalk/device.hpp"
#include "xtalk/error.hpp"
#include "xtalk/evaluator.hpp"
#include "xtalk/rng.hpp"
#include "xtalk/scheduler.hpp"

namespace xtalk {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write " + path);
  out << text;
}

// Writes to `path`, or to `out` when the path is empty.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
}

std::string with_commas(std::int64_t value) {
  std::string digits = std::to_string(value < 0 ? -value : value);
  std::string out;
  for (std::size_t k = 0; k < digits.size(); ++k) {
    if (k > 0 && (digits.size() - k) % 3 == 0) out += ',';
    out += digits[k];
  }
  return value < 0 ? "-" + out : out;
}

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

struct Common {
  std::string device;
  std::string circuit;
  std::vector<double> omegas{0.5};
  double gamma = kDefaultGamma;
  std::string backend = "internal";
  std::string solver_cmd = "z3";
  double timeout_s = 600.0;
  std::uint64_t seed = 1;
  std::int64_t trials = 100000;
  std::string out;
  int cap = 10;
  bool with_timing = false;
};

void add_device(CLI::App* cmd, Common& c, bool required = true) {
  auto* opt = cmd->add_option("--device", c.device, "Device calibration JSON")
                  ->envname("XTALK_DEVICE")
                  ->check(CLI::ExistingFile);
  if (required) opt->required();
}

void add_circuit(CLI::App* cmd, Common& c) {
  cmd->add_option("--circuit", c.circuit, "Circuit file")
      ->envname("XTALK_CIRCUIT")
      ->check(CLI::ExistingFile)
      ->required();
}

void add_scheduling(CLI::App* cmd, Common& c) {
  cmd->add_option("--gamma", c.gamma, "High-crosstalk ratio threshold")
      ->envname("XTALK_GAMMA")
      ->check(CLI::Range(1.0 + 1e-12, 1e9));
  cmd->add_option("--backend", c.backend, "Solver backend")
      ->envname("XTALK_BACKEND")
      ->check(CLI::IsMember({"internal", "smtlib"}));
  cmd->add_option("--solver-cmd", c.solver_cmd, "External SMT solver command")->envname("XTALK_SOLVER_CMD");
  cmd->add_option("--timeout-s", c.timeout_s, "Solver time limit in seconds")
      ->envname("XTALK_TIMEOUT_S")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--cap", c.cap, "Maximum overlap candidates per cx")->check(CLI::Range(0, 20));
}

void add_seed(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master random seed")->envname("XTALK_SEED");
}

void add_out(CLI::App* cmd, Common& c, const std::string& help) {
  cmd->add_option("--out", c.out, help)->envname("XTALK_OUT");
}

SolveOptions solve_options(const Common& c) {
  SolveOptions o;
  o.backend = parse_backend(c.backend);
  o.solver_cmd = c.solver_cmd;
  o.timeout_s = c.timeout_s;
  return o;
}

CanOverlapOptions overlap_options(const Common& c) {
  CanOverlapOptions o;
  o.gamma = c.gamma;
  o.cap = c.cap;
  return o;
}

Schedule solve_checked(const CircuitIR& ir, const DeviceModel& device, double omega, const Common& c,
                       std::ostream& err) {
  auto problem = build_problem(ir, device, omega, overlap_options(c));
  for (const auto& w : problem.warnings) err << "warning: " << w << "\n";
  auto schedule = solve(problem, solve_options(c));
  if (!schedule.stats.optimal) {
    throw SolverError("search stopped at the time limit before proving optimality");
  }
  return schedule;
}

// ----- characterize-plan ----------------------------------------------------

struct PlanArgs {
  std::string policy = "one-hop";
  int k_min = 2;
  int repeats = 100;
  int sequences = 100;
  int srb_trials = 1024;
  double per_trial_s = kDefaultPerTrialSeconds;
  std::int64_t experiments = -1;
};

int cmd_characterize_plan(const Common& c, const PlanArgs& a, std::ostream& out) {
  auto print_cost = [&](const CostEstimate& cost) {
    out << "executions: " << with_commas(cost.executions) << " (" << a.sequences << " sequences x " << a.srb_trials
        << " trials per experiment)\n";
    out << "estimated time: " << fixed(cost.wall_time_s / 3600.0, 2) << " h at " << fixed(a.per_trial_s * 1e3, 3)
        << " ms per execution\n";
  };
  if (a.experiments >= 0) {
    out << "experiments: " << a.experiments << "\n";
    print_cost(estimate_cost(a.experiments, a.sequences, a.srb_trials, a.per_trial_s));
    return kExitOk;
  }
  if (c.device.empty()) throw ArgumentError("--device is required unless --experiments is given");
  auto device = load_device(c.device);
  auto policy = parse_pair_policy(a.policy);
  auto all = enumerate_pairs(device, PairPolicy::AllPairs, c.gamma);
  auto pairs = enumerate_pairs(device, policy, c.gamma);
  auto plan = bin_pack(pairs, device, a.k_min, a.repeats, c.seed, policy);
  auto problems = validate_plan(plan, pairs, device);
  if (!problems.empty()) throw InvariantError("plan failed validation: " + problems.front());

  auto ratio = [](std::size_t base, std::size_t now) {
    return now == 0 ? std::string("n/a") : fixed(static_cast<double>(base) / static_cast<double>(now), 2) + "x";
  };
  out << "pairs (all-pairs): " << all.size() << "\n";
  out << "pairs (" << a.policy << "): " << pairs.size() << " (reduction " << ratio(all.size(), pairs.size())
      << ")\n";
  out << "experiments after packing (k_min " << a.k_min << ", " << a.repeats << " repeats): " << plan.bins.size()
      << " (reduction " << ratio(pairs.size(), plan.bins.size()) << " vs unpacked, "
      << ratio(all.size(), plan.bins.size()) << " vs all-pairs)\n";
  print_cost(estimate_cost(plan, a.sequences, a.srb_trials, a.per_trial_s));
  if (!c.out.empty()) write_text(c.out, plan_to_json(plan));
  return kExitOk;
}

// ----- characterize-fit -----------------------------------------------------

struct FitArgs {
  std::string truth;
  std::string decay_dir;
  std::string policy = "one-hop";
  std::string device_out;
  int sequences = 100;
  int srb_trials = 1024;
};

json conditional_block(const ConditionalErrorTable& table) {
  json entries = json::array();
  for (const auto& [key, e] : table.entries()) {
    entries.push_back({{"gate", key.first}, {"spectator", key.second}, {"error", e}});
  }
  return json{{"conditional_errors", entries}};
}

int cmd_characterize_fit(const Common& c, const FitArgs& a, std::ostream& out, std::ostream& err) {
  if (a.truth.empty() == a.decay_dir.empty()) {
    throw ArgumentError("give exactly one of --truth (simulation) or --decay-dir (fit)");
  }
  ConditionalErrorTable table;
  std::vector<std::string> failures;
  std::optional<DeviceModel> base;

  if (!a.truth.empty()) {
    auto truth = load_device(a.truth);
    base = truth;
    SrbOptions options;
    options.sequences = a.sequences;
    options.trials = a.srb_trials;
    auto pairs = enumerate_pairs(truth, parse_pair_policy(a.policy), c.gamma);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& pair = pairs[k];
      const std::uint64_t seed = derive_seed(c.seed, k);
      try {
        auto alone = simulate_srb(truth, pair, SrbMode::Independent, options, derive_seed(seed, 0));
        auto together = simulate_srb(truth, pair, SrbMode::Simultaneous, options, derive_seed(seed, 1));
        for (int side = 0; side < 2; ++side) {
          const GateId g = side == 0 ? pair.gi : pair.gj;
          const GateId s = side == 0 ? pair.gj : pair.gi;
          double e_alone = fit_rb(alone[side]).cx_error;
          double e_together = fit_rb(together[side]).cx_error;
          table.set(g, s, e_together);
          out << "E(" << g << "|" << s << ") = " << fixed(e_together, 5) << "  E(" << g << ") = " << fixed(e_alone, 5)
              << "  ratio " << fixed(e_together / e_alone, 2) << "\n";
        }
      } catch (const FitError& e) {
        failures.push_back("pair (" + std::to_string(pair.gi) + ", " + std::to_string(pair.gj) + "): " + e.what());
      }
    }
  } else {
    if (!fs::is_directory(a.decay_dir)) throw ArgumentError("not a directory: " + a.decay_dir);
    if (!c.device.empty()) base = load_device(c.device);
    static const std::regex srb_name(R"(srb_(\d+)_(\d+)\.csv)");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(a.decay_dir)) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
      std::smatch m;
      std::string name = path.filename().string();
      if (!std::regex_match(name, m, srb_name)) continue;
      RbDecayCurve curve;
      try {
        curve = parse_decay_csv(read_text(path.string()));
      } catch (const ParseError& e) {
        throw ParseError(name + ": " + e.what());
      }
      try {
        double e = fit_rb(curve).cx_error;
        table.set(std::stoi(m[1]), std::stoi(m[2]), e);
        out << "E(" << m[1] << "|" << m[2] << ") = " << fixed(e, 5) << "\n";
      } catch (const FitError& e) {
        failures.push_back(name + ": " + e.what());
      }
    }
  }

  emit(c.out, conditional_block(table).dump(2) + "\n", out);
  if (!a.device_out.empty()) {
    if (!base) throw ArgumentError("--device-out needs --truth or --device");
    write_text(a.device_out, device_to_json(base->with_conditional_errors(table)));
  }
  for (const auto& f : failures) err << "fit failed: " << f << "\n";
  return failures.empty() ? kExitOk : kExitSolver;
}

// ----- schedule ---------------------------------------------------------------

struct ScheduleArgs {
  std::string scheduler = "xtalk";
};

int cmd_schedule(const Common& c, const ScheduleArgs& a, std::ostream& out, std::ostream& err) {
  auto device = load_device(c.device);
  auto ir = load_circuit(c.circuit);
  const double omega = c.omegas.front();

  Schedule schedule;
  if (a.scheduler == "serial") {
    schedule = series_schedule(ir, device, omega, c.gamma);
  } else if (a.scheduler == "parallel") {
    schedule = parallel_schedule(ir, device, omega, c.gamma);
  } else {
    schedule = solve_checked(ir, device, omega, c, err);
  }
  auto violations = verify_schedule(ir, device, schedule);
  if (!violations.empty()) {
    for (const auto& v : violations) err << "violation [" << to_string(v.kind) << "]: " << v.message << "\n";
    return kExitVerification;
  }
  std::optional<BarrieredCircuit> barriered;
  if (schedule.barrier_enforced) barriered = insert_barriers(ir, device, schedule);

  std::string json_text = schedule_to_json(schedule, c.with_timing);
  std::vector<std::string> written;
  try {
    if (c.out.empty()) {
      out << json_text;
    } else {
      fs::create_directories(c.out);
      std::string stem = fs::path(c.circuit).stem().string();
      std::string sched_path = (fs::path(c.out) / (stem + "." + a.scheduler + ".schedule.json")).string();
      write_text(sched_path, json_text);
      written.push_back(sched_path);
      if (barriered) {
        std::string qc_path = (fs::path(c.out) / (stem + "." + a.scheduler + ".barriered.qc")).string();
        write_text(qc_path, serialize_circuit(barriered->circuit));
        written.push_back(qc_path);
      }
      out << "scheduler: " << a.scheduler << "\n";
      out << "objective: " << schedule.objective << "\n";
      out << "makespan_ns: " << schedule.makespan_ns << "\n";
      if (barriered) out << "barriers added: " << barriered->barriers_added << "\n";
      for (const auto& p : written) out << "wrote " << p << "\n";
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
  return kExitOk;
}

// ----- compare ------------------------------------------------------------------

int cmd_compare(const Common& c, std::ostream& out, std::ostream& err) {
  auto device = load_device(c.device);
  auto ir = load_circuit(c.circuit);
  std::vector<Schedule> schedules;
  schedules.push_back(parallel_schedule(ir, device, c.omegas.front(), c.gamma));
  schedules.push_back(series_schedule(ir, device, c.omegas.front(), c.gamma));
  for (double omega : c.omegas) {
    if (!(omega >= 0.0 && omega <= 1.0)) throw ArgumentError("omega must lie in [0, 1]");
    schedules.push_back(solve_checked(ir, device, omega, c, err));
  }
  auto rows = compare(ir, device, schedules, c.trials, c.seed);
  emit(c.out, comparison_to_csv(rows), out);
  return kExitOk;
}

// ----- bench --------------------------------------------------------------------

struct BenchArgs {
  QubitId qa = 0;
  QubitId qb = 0;
  int qubits = 0;
  int depth = 0;
};

int cmd_bench_swap(const Common& c, const BenchArgs& a, std::ostream& out, std::ostream& err) {
  auto device = load_device(c.device);
  auto swap = gen_swap_path(device, a.qa, a.qb);
  emit(c.out, serialize_circuit(swap.circuit), out);
  std::ostream& info = c.out.empty() ? err : out;
  info << "path:";
  for (QubitId q : swap.path) info << " " << q;
  info << "\nmeeting edge: " << swap.meeting_edge.first << " " << swap.meeting_edge.second << "\n";
  if (!swap.note.empty()) info << swap.note << "\n";
  return kExitOk;
}

int cmd_bench_random(const Common& c, const BenchArgs& a, std::ostream& out) {
  auto device = load_device(c.device);
  auto ir = gen_random_circuit(device, a.qubits, a.depth, c.seed);
  emit(c.out, serialize_circuit(ir), out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Crosstalk-aware instruction scheduling and characterization"};
  app.name(args.empty() ? "xtalk" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);

  Common c;
  PlanArgs plan_args;
  FitArgs fit_args;
  ScheduleArgs sched_args;
  BenchArgs bench_args;

  auto* plan = app.add_subcommand("characterize-plan", "Plan simultaneous RB experiments and estimate cost");
  add_device(plan, c, false);
  plan->add_option("--policy", plan_args.policy, "all-pairs, one-hop or high-crosstalk-daily")
      ->check(CLI::IsMember({"all-pairs", "one-hop", "high-crosstalk-daily"}));
  plan->add_option("--gamma", c.gamma, "High-crosstalk ratio threshold")->envname("XTALK_GAMMA");
  plan->add_option("--k-min", plan_args.k_min, "Minimum hop distance between pairs in a bin")
      ->check(CLI::PositiveNumber);
  plan->add_option("--repeats", plan_args.repeats, "Randomized first-fit passes")->check(CLI::PositiveNumber);
  plan->add_option("--sequences", plan_args.sequences, "RB sequences per experiment")->check(CLI::PositiveNumber);
  plan->add_option("--trials", plan_args.srb_trials, "Executions per sequence")
      ->envname("XTALK_TRIALS")
      ->check(CLI::PositiveNumber);
  plan->add_option("--per-trial-s", plan_args.per_trial_s, "Seconds per execution");
  plan->add_option("--experiments", plan_args.experiments, "Only estimate the cost of this many experiments")
      ->check(CLI::NonNegativeNumber);
  add_seed(plan, c);
  add_out(plan, c, "Plan file to write");

  auto* fit = app.add_subcommand("characterize-fit", "Simulate or fit SRB decays into conditional error rates");
  fit->add_option("--truth", fit_args.truth, "Ground-truth device for simulation mode")->check(CLI::ExistingFile);
  fit->add_option("--decay-dir", fit_args.decay_dir, "Directory of srb_<gate>_<spectator>.csv files");
  add_device(fit, c, false);
  fit->add_option("--policy", fit_args.policy, "Pairs to simulate")
      ->check(CLI::IsMember({"all-pairs", "one-hop", "high-crosstalk-daily"}));
  fit->add_option("--gamma", c.gamma, "High-crosstalk ratio threshold")->envname("XTALK_GAMMA");
  fit->add_option("--sequences", fit_args.sequences, "RB sequences per length")->check(CLI::PositiveNumber);
  fit->add_option("--trials", fit_args.srb_trials, "Executions per sequence")
      ->envname("XTALK_TRIALS")
      ->check(CLI::PositiveNumber);
  fit->add_option("--device-out", fit_args.device_out, "Write the device with the fitted table merged in");
  add_seed(fit, c);
  add_out(fit, c, "Conditional error block to write");

  auto* sched = app.add_subcommand("schedule", "Schedule a circuit and write the schedule and barriered circuit");
  add_device(sched, c);
  add_circuit(sched, c);
  sched->add_option("--omega", c.omegas, "Crosstalk weight in [0,1]")
      ->envname("XTALK_OMEGA")
      ->expected(1)
      ->check(CLI::Range(0.0, 1.0));
  add_scheduling(sched, c);
  sched->add_option("--scheduler", sched_args.scheduler, "xtalk, serial or parallel")
      ->check(CLI::IsMember({"xtalk", "serial", "parallel"}));
  sched->add_flag("--with-timing", c.with_timing, "Record solve time in the schedule file");
  add_out(sched, c, "Output directory");

  auto* cmp = app.add_subcommand("compare", "Compare serial, parallel and crosstalk-aware schedules");
  add_device(cmp, c);
  add_circuit(cmp, c);
  cmp->add_option("--omega", c.omegas, "Comma-separated crosstalk weights")
      ->envname("XTALK_OMEGA")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  add_scheduling(cmp, c);
  cmp->add_option("--trials", c.trials, "Monte Carlo trials per schedule (0 to skip)")
      ->envname("XTALK_TRIALS")
      ->check(CLI::NonNegativeNumber);
  add_seed(cmp, c);
  add_out(cmp, c, "CSV file to write");

  auto* bench = app.add_subcommand("bench", "Generate benchmark circuits");
  bench->require_subcommand(1);
  auto* swap = bench->add_subcommand("swap", "SWAP chain realizing a distant cx");
  add_device(swap, c);
  swap->add_option("qa", bench_args.qa, "First qubit")->required();
  swap->add_option("qb", bench_args.qb, "Second qubit")->required();
  add_out(swap, c, "Circuit file to write");
  auto* random = bench->add_subcommand("random", "Random layered circuit");
  add_device(random, c);
  random->add_option("--qubits", bench_args.qubits, "Number of qubits")->required()->check(CLI::PositiveNumber);
  random->add_option("--depth", bench_args.depth, "Number of layers")->required()->check(CLI::NonNegativeNumber);
  add_seed(random, c);
  add_out(random, c, "Circuit file to write");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("xtalk");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*plan) return cmd_characterize_plan(c, plan_args, out);
    if (*fit) return cmd_characterize_fit(c, fit_args, out, err);
    if (*sched) return cmd_schedule(c, sched_args, out, err);
    if (*cmp) return cmd_compare(c, out, err);
    if (*swap) return cmd_bench_swap(c, bench_args, out, err);
    if (*random) return cmd_bench_random(c, bench_args, out);
  } catch (const VerificationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitVerification;
  } catch (const SolverError& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const FitError& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace xtalk
