// Command-line front end: reads a scenario file and runs one analysis.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fairdyn/fairdyn.hpp"

namespace {

enum ExitCode : int { kOk = 0, kUsage = 2, kParse = 3, kSolver = 4, kIo = 5 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fairdyn::GroupState parse_state(const std::string& text, const char* flag) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw UsageError(std::string(flag) + " expects mu_c,mu_nc");
  fairdyn::GroupState x;
  try {
    std::size_t used = 0;
    const std::string a = text.substr(0, comma), b = text.substr(comma + 1);
    x.mu_c = std::stod(a, &used);
    if (used != a.size()) throw std::invalid_argument(a);
    x.mu_nc = std::stod(b, &used);
    if (used != b.size()) throw std::invalid_argument(b);
  } catch (const std::exception&) {
    throw UsageError(std::string(flag) + " expects two numbers mu_c,mu_nc, got '" + text + "'");
  }
  if (!(x.mu_c >= 0.0 && x.mu_nc >= 0.0)) throw UsageError(std::string(flag) + " means must be >= 0");
  return x;
}

fairdyn::Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return fairdyn::parse_scenario(buf.str());
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
    if (!std::cout) throw IoError("failed writing to standard output");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open output file '" + path + "'");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing output file '" + path + "'");
}

struct CommonOptions {
  std::string scenario;
  std::string out;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& desc, CommonOptions& opts) {
  auto* cmd = app.add_subcommand(name, desc);
  cmd->add_option("-s,--scenario", opts.scenario, "Scenario JSON file")->required();
  cmd->add_option("-o,--out", opts.out, "Output file (default: standard output)");
  return cmd;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feedback-loop model of top-n selection: thresholds, dynamics, equilibria, stability"};
  app.require_subcommand(1, 1);
  app.footer(
      "Exit codes: 0 ok, 2 usage, 3 scenario parse/validation, 4 solver failure, 5 I/O.\n"
      "FAIRDYN_WORKERS sets the worker count for phase, basin and montecarlo.");

  CommonOptions opts;
  std::string state = "";
  std::string start = "";
  std::size_t steps = 1000;
  double tol = 1e-9;
  double mu_max = 0.0;
  std::size_t resolution = 21;
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  std::string trials_csv;

  auto* threshold = add_command(app, "threshold", "Solve the threshold(s) at a state; CSV theta_c,theta_nc,P_c,P_nc,residual", opts);
  threshold->add_option("--state", state, "Group means mu_c,mu_nc")->required();

  auto* step_cmd = add_command(app, "step", "Apply one update; CSV mu_c,mu_nc", opts);
  step_cmd->add_option("--state", state, "Group means mu_c,mu_nc")->required();

  auto* simulate = add_command(app, "simulate", "Iterate the update; trajectory CSV", opts);
  simulate->add_option("--start", start, "Initial means mu_c,mu_nc")->required();
  simulate->add_option("--steps", steps, "Maximum number of steps")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--tol", tol, "Convergence tolerance on the max-norm step change")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* phase = add_command(app, "phase", "One-step displacement field on a grid; CSV mu_c,mu_nc,u,v,flag", opts);
  phase->add_option("--mu-max", mu_max, "Grid extent (default: 1.05 x largest equilibrium coordinate)");
  phase->add_option("--resolution", resolution, "Grid points per axis")->capture_default_str();

  std::size_t basin_steps = 1000;
  double basin_tol = 1e-9;
  auto* basin = add_command(app, "basin", "Attractor label per grid start; CSV mu_c,mu_nc,attractor,steps", opts);
  basin->add_option("--mu-max", mu_max, "Grid extent (default: 1.05 x largest equilibrium coordinate)");
  basin->add_option("--resolution", resolution, "Grid points per axis")->capture_default_str();
  basin->add_option("--steps", basin_steps, "Maximum steps per cell")->capture_default_str()->check(CLI::PositiveNumber);
  basin->add_option("--tol", basin_tol, "Convergence and labeling tolerance")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  add_command(app, "equilibria", "Closed-form equilibria with step residuals; CSV", opts);
  add_command(app, "stability", "Jacobians, eigenvalues and verdicts at each equilibrium; JSON", opts);

  auto* montecarlo = add_command(app, "montecarlo", "Finite-population trials against the expected model; JSON", opts);
  montecarlo->add_option("--state", state, "Group means mu_c,mu_nc")->required();
  montecarlo->add_option("--trials", trials, "Number of trials")->capture_default_str()->check(CLI::PositiveNumber);
  montecarlo->add_option("--seed", seed, "Master seed")->capture_default_str();
  montecarlo->add_option("--trials-csv", trials_csv, "Also write per-trial CSV to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const fairdyn::Scenario s = load_scenario(opts.scenario);
    std::ostringstream os;
    const unsigned workers = fairdyn::default_workers();

    if (threshold->parsed()) {
      fairdyn::write_threshold_csv(os, fairdyn::solve_thresholds(s, parse_state(state, "--state")));
    } else if (step_cmd->parsed()) {
      const auto next = fairdyn::step(s, parse_state(state, "--state"));
      os << "mu_c,mu_nc\n" << fairdyn::format_number(next.mu_c) << ',' << fairdyn::format_number(next.mu_nc) << '\n';
    } else if (simulate->parsed()) {
      const auto tr = fairdyn::simulate(s, parse_state(start, "--start"), {steps, tol});
      fairdyn::write_trajectory_csv(os, tr);
    } else if (phase->parsed() || basin->parsed()) {
      fairdyn::GridSpec grid{mu_max > 0.0 ? mu_max : fairdyn::default_grid_extent(s), resolution};
      if (grid.resolution < 2) throw UsageError("--resolution must be >= 2");
      if (phase->parsed()) fairdyn::write_phase_csv(os, fairdyn::phase_field(s, grid, workers));
      else fairdyn::write_basin_csv(os, fairdyn::basin_map(s, grid, basin_steps, basin_tol, workers));
    } else if (app.got_subcommand("equilibria")) {
      fairdyn::write_equilibria_csv(os, fairdyn::analytic_equilibria(s));
    } else if (app.got_subcommand("stability")) {
      nlohmann::json reports = nlohmann::json::array();
      for (const auto& e : fairdyn::analytic_equilibria(s)) reports.push_back(fairdyn::to_json(fairdyn::stability_report(s, e)));
      nlohmann::json doc = {{"scenario", fairdyn::to_json(s)}, {"equilibria", reports}};
      os << doc.dump(2) << '\n';
    } else if (montecarlo->parsed()) {
      const auto summary = fairdyn::aggregate_trials(s, parse_state(state, "--state"), trials, seed, workers);
      os << fairdyn::to_json(summary).dump(2) << '\n';
      if (!trials_csv.empty()) {
        std::ostringstream csv;
        fairdyn::write_trials_csv(csv, summary.outcomes);
        emit(trials_csv, csv.str());
      }
    }
    emit(opts.out, os.str());
    return kOk;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const fairdyn::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return kParse;
  } catch (const fairdyn::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::domain_error& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  }
}
