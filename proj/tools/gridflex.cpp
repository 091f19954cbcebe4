#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "gridflex/gridflex.hpp"

namespace fs = std::filesystem;
using namespace gridflex;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

bool is_config_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigInvalid:
    case ErrorKind::UnknownAction:
    case ErrorKind::UnknownObservation:
    case ErrorKind::EmptyDistrict:
      return true;
    default:
      return false;
  }
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("gridflex");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("GRIDFLEX_LOG")) spdlog::set_level(spdlog::level::from_str(level));
}

void ensure_writable(const fs::path& path, bool force) {
  if (fs::exists(path) && !force) {
    throw Error(ErrorKind::ConfigInvalid, path.string() + " exists; pass --force to overwrite");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::ofstream open_file(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write " + path.string());
  return out;
}

int cmd_validate(const std::string& schema, bool lenient) {
  LoadOptions opts;
  opts.lenient = true;
  const auto district = load_district(schema, opts);
  RewardRegistry::builtin().at(district.config.reward.name);
  for (const auto& v : district.report.violations) std::cout << describe(v) << '\n';
  const auto count = district.report.violations.size();
  spdlog::info("{}: {} buildings, {} steps, {} violations", schema, district.buildings.size(), district.steps(), count);
  if (count > 0 && !lenient) return kExitRuntime;
  return kExitOk;
}

struct SimulateArgs {
  std::string manifest;
  std::string schema;
  std::string agent = "baseline";
  std::string params;
  std::string rules;
  std::uint64_t seed = 0;
  std::size_t episodes = 1;
  std::string out;
  std::size_t parallel = 1;
  bool force = false;
};

int cmd_simulate(const SimulateArgs& a) {
  RunManifest m;
  if (!a.manifest.empty()) {
    m = load_manifest(a.manifest);
    if (!a.out.empty()) m.out = a.out;
  } else {
    if (a.schema.empty() || a.out.empty()) throw Error(ErrorKind::ConfigInvalid, "simulate needs --schema and --out");
    m.schema = a.schema;
    m.agent = a.agent;
    m.seed = a.seed;
    m.episodes = a.episodes;
    m.out = a.out;
    if (!a.params.empty()) m.params = read_json_file(a.params);
    if (!a.rules.empty()) m.params["rules"] = read_json_file(a.rules);
  }
  m.version = kEngineVersion;
  spdlog::info("simulate {} agent={} seed={} episodes={} parallel={}", m.schema, m.agent, m.seed, m.episodes, a.parallel);
  const auto result = run_simulation(m, {a.parallel, a.force});
  for (const auto& dir : result.episode_dirs) spdlog::debug("wrote {}", dir.string());
  spdlog::info("wrote {} episodes to {}", result.episode_dirs.size(), m.out);
  return kExitOk;
}

int cmd_kpi(const std::string& trace_dir, const std::string& baseline, const std::string& out, bool force) {
  auto report = compute_kpis(read_trace(trace_dir));
  if (!baseline.empty()) report = kpi_ratio(report, compute_kpis(read_trace(baseline)));
  const fs::path path(out);
  ensure_writable(path, force);
  auto file = open_file(path);
  if (path.extension() == ".csv") {
    write_kpi_csv(file, report);
  } else {
    file << to_json(report).dump(2) << '\n';
  }
  if (report.partial_day_dropped) spdlog::warn("trailing partial day dropped from daily KPIs");
  spdlog::info("wrote {}", out);
  return kExitOk;
}

int cmd_outage_sample(const OutageModel& model, std::size_t days, double seconds_per_step, const std::string& out,
                      bool force) {
  validate(model);
  const std::size_t horizon = days * steps_per_day(seconds_per_step);
  const auto signal = generate_outage_signal(model, horizon, seconds_per_step);
  ensure_writable(out, force);
  auto file = open_file(out);
  csv::Writer w(file);
  w.header({"time_step", "power_outage"});
  std::size_t outage_steps = 0;
  for (std::size_t t = 0; t < signal.size(); ++t) {
    w.row({std::to_string(t), std::to_string(signal[t])});
    outage_steps += static_cast<std::size_t>(signal[t]);
  }
  spdlog::info("{} outage steps in {} steps", outage_steps, signal.size());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"gridflex: district energy flexibility simulator"};
  app.set_version_flag("--version", std::string(kEngineVersion));
  app.require_subcommand(1);

  auto* validate_cmd = app.add_subcommand("validate", "Check a district schema and its CSV files");
  std::string validate_schema;
  bool lenient = false;
  validate_cmd->add_option("schema", validate_schema, "schema.json")->required()->check(CLI::ExistingFile);
  validate_cmd->add_flag("--lenient", lenient, "Report violations without failing");

  auto* simulate_cmd = app.add_subcommand("simulate", "Run episodes with an agent and write traces");
  SimulateArgs sim;
  simulate_cmd->add_option("--manifest", sim.manifest, "Re-run a manifest.json")->check(CLI::ExistingFile);
  simulate_cmd->add_option("--schema", sim.schema, "schema.json")->check(CLI::ExistingFile);
  simulate_cmd->add_option("--agent", sim.agent, "baseline, random, hour_rbc or q_learning")->capture_default_str();
  simulate_cmd->add_option("--params", sim.params, "Agent parameters (JSON file)")->check(CLI::ExistingFile);
  simulate_cmd->add_option("--rules", sim.rules, "Hour rules for hour_rbc (JSON file)")->check(CLI::ExistingFile);
  simulate_cmd->add_option("--seed", sim.seed, "Run seed")->capture_default_str();
  simulate_cmd->add_option("--episodes", sim.episodes, "Number of episodes")->capture_default_str();
  simulate_cmd->add_option("--out", sim.out, "Output directory");
  simulate_cmd->add_option("--parallel", sim.parallel, "Concurrent episodes")->capture_default_str()->check(CLI::PositiveNumber);
  simulate_cmd->add_flag("--force", sim.force, "Overwrite a non-empty output directory");

  auto* kpi_cmd = app.add_subcommand("kpi", "Compute KPIs from a trace directory");
  std::string trace_dir, baseline_dir, kpi_out;
  bool kpi_force = false;
  kpi_cmd->add_option("trace_dir", trace_dir, "Episode trace directory")->required()->check(CLI::ExistingDirectory);
  kpi_cmd->add_option("--baseline", baseline_dir, "Baseline trace directory for ratios")->check(CLI::ExistingDirectory);
  kpi_cmd->add_option("--out", kpi_out, "report.json or report.csv")->required();
  kpi_cmd->add_flag("--force", kpi_force, "Overwrite an existing report");

  auto* outage_cmd = app.add_subcommand("outage-sample", "Sample a stochastic outage signal");
  OutageModel model;
  std::size_t days = 365;
  double seconds_per_step = 3600.0;
  std::string outage_out;
  bool outage_force = false;
  outage_cmd->add_option("--saifi", model.saifi, "Interruptions per customer per year")->required();
  outage_cmd->add_option("--caidi", model.caidi, "Mean interruption duration in minutes")->required();
  outage_cmd->add_option("--seed", model.seed, "Generator seed")->capture_default_str();
  outage_cmd->add_option("--days", days, "Days to sample")->capture_default_str();
  outage_cmd->add_option("--seconds-per-step", seconds_per_step, "Step length")->capture_default_str();
  outage_cmd->add_option("--out", outage_out, "signal.csv")->required();
  outage_cmd->add_flag("--force", outage_force, "Overwrite an existing file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(validate_schema, lenient);
    if (*simulate_cmd) return cmd_simulate(sim);
    if (*kpi_cmd) return cmd_kpi(trace_dir, baseline_dir, kpi_out, kpi_force);
    if (*outage_cmd) return cmd_outage_sample(model, days, seconds_per_step, outage_out, outage_force);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    if (is_config_error(e.kind())) {
      std::cerr << "Run with --help for usage.\n";
      return kExitUsage;
    }
    return kExitRuntime;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
