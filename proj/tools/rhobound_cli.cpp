// rhobound: run verification scenarios and parameter sweeps.
//
//   rhobound run <scenario.json> [--out DIR] [--threads K]
//   rhobound sweep <scenario.json> --param P --from A --to B --steps K [--out DIR]
//   rhobound list-checks
//
// Exit codes: 0 all applicable checks hold, 1 a check is violated, 2 scenario or
// argument error, 3 numeric failure (quadrature cap, singular Gram).
// RHOBOUND_LOG = error | warn | info | debug sets stderr verbosity.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rhobound/parallel.hpp"
#include "rhobound/scenario.hpp"

namespace {

namespace fs = std::filesystem;
namespace sc = rhobound::scenario;

enum Exit { kOk = 0, kViolated = 1, kParse = 2, kNumeric = 3 };

int log_level() {
  const char* env = std::getenv("RHOBOUND_LOG");
  const std::string v = env ? env : "warn";
  if (v == "error") return 0;
  if (v == "info") return 2;
  if (v == "debug") return 3;
  return 1;
}

void log(int level, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (level <= log_level()) std::cerr << "rhobound: " << names[level] << ": " << msg << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const sc::ParseError& e) {
    log(0, e.what());
    return kParse;
  } catch (const rhobound::InvalidArgument& e) {
    log(0, e.what());
    return kParse;
  } catch (const rhobound::NumericFailure& e) {
    log(0, std::string("numeric failure: ") + e.what());
    return kNumeric;
  } catch (const std::exception& e) {
    log(0, e.what());
    return kNumeric;
  }
}

int cmd_run(const std::string& path, const fs::path& out_dir) {
  const auto scenario = sc::load(path);
  log(2, "scenario '" + scenario.name + "' with " + std::to_string(scenario.checks.size()) + " checks");
  const auto result = sc::run(scenario, [](const std::string& m) { log(2, m); });
  fs::create_directories(out_dir);
  write_text(out_dir / "report.json", result.report.dump(2) + "\n");
  write_text(out_dir / "summary.csv", sc::summary_csv(result.report));
  for (const auto& r : result.report)
    if (r.value("applicable", true) && !r.value("satisfied", true)) log(1, "violated: " + r.dump());
  return result.violated ? kViolated : kOk;
}

int cmd_sweep(const std::string& path, const sc::SweepSpec& spec, const fs::path& out_dir) {
  const auto scenario = sc::load(path);
  const auto result = sc::sweep(scenario, spec);
  fs::create_directories(out_dir);
  write_text(out_dir / "sweep.csv", sc::sweep_csv(spec, result));
  sc::Json meta;
  meta["param"] = spec.param;
  meta["rows"] = result.rows.size();
  if (result.slope) meta["loglog_slope"] = *result.slope;
  write_text(out_dir / "sweep.json", meta.dump(2) + "\n");
  std::cout << sc::sweep_csv(spec, result);
  if (result.slope) std::cout << "loglog_slope," << std::setprecision(10) << *result.slope << '\n';
  return result.violated ? kViolated : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local electron-density bound verification"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  std::string scenario_path;
  std::string out_dir = ".";
  auto* run = app.add_subcommand("run", "execute the checks of a scenario");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", out_dir, "output directory for report.json and summary.csv");
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  sc::SweepSpec spec;
  std::string spacing;
  auto* sweep = app.add_subcommand("sweep", "tabulate the theorem bound along one parameter");
  sweep->add_option("scenario", scenario_path, "scenario JSON file")->required();
  sweep->add_option("--param", spec.param, "d_omega | N | L | a")->required();
  sweep->add_option("--from", spec.from, "first value")->required();
  sweep->add_option("--to", spec.to, "last value")->required();
  sweep->add_option("--steps", spec.steps, "number of values")->required();
  sweep->add_option("--spacing", spacing, "geometric | linear (default geometric for d_omega and a, linear for N and L)");
  sweep->add_flag("--couple-nuclei", spec.couple_nuclei, "in N sweeps set L = N");
  sweep->add_option("--out", out_dir, "output directory for sweep.csv and sweep.json");
  sweep->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* list = app.add_subcommand("list-checks", "print the available check names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kParse;
  }
  rhobound::worker_threads() = threads;

  if (*list) {
    for (const auto& n : sc::check_names()) std::cout << n << '\n';
    return kOk;
  }
  if (*run) return guarded([&] { return cmd_run(scenario_path, out_dir); });
  if (spacing.empty()) {
    spec.geometric = spec.param == "d_omega" || spec.param == "a";
  } else if (spacing == "geometric" || spacing == "linear") {
    spec.geometric = spacing == "geometric";
  } else {
    log(0, "--spacing must be geometric or linear");
    return kParse;
  }
  return guarded([&] { return cmd_sweep(scenario_path, spec, out_dir); });
}
