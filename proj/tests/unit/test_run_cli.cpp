#include <algorithm>
#include <cstdlib>
#include <filesystem>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "test_support.hpp"

using namespace gridflex;
using namespace gridflex::testing;
namespace fs = std::filesystem;

namespace {

// Relative paths of every regular file below dir, sorted.
std::vector<std::string> tree(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir).string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void expect_same_outputs(const fs::path& a, const fs::path& b) {
  const auto files = tree(a);
  ASSERT_EQ(files, tree(b));
  for (const auto& f : files) {
    if (f == "manifest.json") continue;
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  }
}

RunManifest manifest(const std::string& agent, const fs::path& out, std::size_t episodes = 1, std::uint64_t seed = 0) {
  RunManifest m;
  m.schema = fixture_schema().string();
  m.agent = agent;
  m.seed = seed;
  m.episodes = episodes;
  m.out = out.string();
  return m;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Run, BaselineMatchesGoldenTrace) {
  TempDir dir;
  run_simulation(manifest("baseline", dir / "run"));
  const auto episode = dir / "run" / "episode_000";
  const auto golden = fixture_dir() / "golden" / "baseline";
  if (std::getenv("GRIDFLEX_UPDATE_GOLDEN")) {
    fs::remove_all(golden);
    fs::create_directories(golden);
    for (const auto& f : tree(episode)) fs::copy_file(episode / f, golden / f);
  }
  expect_same_outputs(episode, golden);
}

TEST(Run, OutputLayout) {
  TempDir dir;
  const auto result = run_simulation(manifest("random", dir / "run", 2, 7));
  EXPECT_EQ(tree(dir / "run"),
            (std::vector<std::string>{"episode_000/Building_1.csv", "episode_000/Building_2.csv",
                                      "episode_000/district.csv", "episode_000/run_summary.json",
                                      "episode_001/Building_1.csv", "episode_001/Building_2.csv",
                                      "episode_001/district.csv", "episode_001/run_summary.json", "kpis.json",
                                      "manifest.json"}));
  EXPECT_EQ(result.kpis.size(), 2u);
  const auto m = load_manifest(dir / "run" / "manifest.json");
  EXPECT_EQ(m.agent, "random");
  EXPECT_EQ(m.seed, 7u);
  EXPECT_EQ(m.episodes, 2u);
}

TEST(Run, SameSeedSameBytes) {
  TempDir dir;
  run_simulation(manifest("random", dir / "a", 3, 11));
  run_simulation(manifest("random", dir / "b", 3, 11));
  expect_same_outputs(dir / "a", dir / "b");
  run_simulation(manifest("random", dir / "c", 3, 12));
  EXPECT_NE(read_file(dir / "a" / "episode_000" / "district.csv"), read_file(dir / "c" / "episode_000" / "district.csv"));
}

TEST(Run, ParallelEpisodesMatchSequential) {
  TempDir dir;
  run_simulation(manifest("random", dir / "seq", 5, 3), {1, false});
  run_simulation(manifest("random", dir / "par", 5, 3), {3, false});
  expect_same_outputs(dir / "seq", dir / "par");
}

TEST(Run, LearningAgentRunsEveryEpisode) {
  TempDir dir;
  auto m = manifest("q_learning", dir / "q", 3, 5);
  m.params = {{"epsilon", 0.3}};
  const auto result = run_simulation(m);
  EXPECT_EQ(result.episode_dirs.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) EXPECT_TRUE(fs::exists(dir / "q" / episode_dir_name(e) / "district.csv"));
  const auto kpis = nlohmann::json::parse(read_file(dir / "q" / "kpis.json"));
  ASSERT_EQ(kpis.size(), 3u);
  EXPECT_EQ(kpis[2]["episode"], 2);
  run_simulation(m, {3, true});
  const auto again = dir / "q2";
  m.out = again.string();
  run_simulation(m);
  expect_same_outputs(dir / "q", again);
}

TEST(Run, RefusesNonEmptyOutput) {
  TempDir dir;
  write_file(dir / "run" / "keep.txt", "x");
  EXPECT_ERROR_KIND(run_simulation(manifest("baseline", dir / "run")), ErrorKind::ConfigInvalid);
  run_simulation(manifest("baseline", dir / "run"), {1, true});
  EXPECT_FALSE(fs::exists(dir / "run" / "keep.txt"));
  EXPECT_ERROR_KIND(run_simulation(manifest("genius", dir / "other")), ErrorKind::ConfigInvalid);
  EXPECT_ERROR_KIND(run_simulation(manifest("baseline", dir / "none", 0)), ErrorKind::ConfigInvalid);
}

TEST(Run, TraceRoundTripPreservesKpis) {
  TempDir dir;
  const auto result = run_simulation(manifest("random", dir / "run", 1, 4));
  const auto trace = read_trace(dir / "run" / "episode_000");
  EXPECT_EQ(trace.length(), 24u);
  const auto a = to_json(compute_kpis(trace));
  const auto b = to_json(result.kpis[0]);
  for (const auto& [name, value] : b["district"].items()) {
    if (value.is_null()) {
      EXPECT_TRUE(a["district"][name].is_null());
    } else {
      EXPECT_NEAR(a["district"][name].get<double>(), value.get<double>(), 1e-9) << name;
    }
  }
}

TEST(Cli, SimulateAndExitCodes) {
  TempDir dir;
  const auto schema = q(fixture_schema());
  EXPECT_EQ(run_cli("simulate --schema " + schema + " --out " + q(dir / "run")), 0);
  EXPECT_EQ(run_cli("simulate --schema " + schema + " --out " + q(dir / "run")), 2);
  EXPECT_EQ(run_cli("simulate --schema " + schema + " --out " + q(dir / "run") + " --force"), 0);
  EXPECT_EQ(run_cli("simulate --schema " + schema + " --agent sorcerer --out " + q(dir / "x")), 2);
  EXPECT_EQ(run_cli("simulate --schema " + schema + " --episodes nine --out " + q(dir / "x")), 2);
  EXPECT_EQ(run_cli("simulate --schema " + schema + " --agent hour_rbc --rules " + q(fixture_dir() / "rules.json") +
                    " --out " + q(dir / "rbc")),
            0);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli(""), 2);
}

TEST(Cli, ManifestRerunReproducesTraces) {
  TempDir dir;
  const auto schema = q(fixture_schema());
  ASSERT_EQ(run_cli("simulate --schema " + schema + " --agent random --seed 9 --episodes 2 --parallel 2 --out " +
                    q(dir / "first")),
            0);
  ASSERT_EQ(run_cli("simulate --manifest " + q(dir / "first" / "manifest.json") + " --out " + q(dir / "second")), 0);
  expect_same_outputs(dir / "first", dir / "second");
}

TEST(Cli, Validate) {
  TempDir dir;
  copy_fixture(dir.path());
  EXPECT_EQ(run_cli("validate " + q(dir / "schema.json")), 0);
  auto text = read_file(dir / "Building_1.csv");
  const auto line = text.find('\n', text.find('\n') + 1);
  // negate the first cooling demand of row 1
  auto table = csv::read(dir / "Building_1.csv");
  const auto col = table.index("cooling_demand");
  auto cells = csv::split_line(text.substr(text.find('\n') + 1, line - text.find('\n') - 1));
  cells[col] = "-3";
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) row += (i ? "," : "") + cells[i];
  text.replace(text.find('\n') + 1, line - text.find('\n') - 1, row);
  write_file(dir / "Building_1.csv", text);
  EXPECT_EQ(run_cli("validate " + q(dir / "schema.json")), 1);
  EXPECT_EQ(run_cli("validate --lenient " + q(dir / "schema.json")), 0);
  EXPECT_EQ(run_cli("validate " + q(dir / "missing.json")), 2);
  auto schema = nlohmann::json::parse(read_file(dir / "schema.json"));
  schema["reward_function"]["name"] = "cost";
  write_file(dir / "schema.json", schema.dump());
  EXPECT_EQ(run_cli("validate --lenient " + q(dir / "schema.json")), 2);
}

TEST(Cli, KpiReport) {
  TempDir dir;
  ASSERT_EQ(run_cli("simulate --schema " + q(fixture_schema()) + " --agent random --out " + q(dir / "run")), 0);
  ASSERT_EQ(run_cli("simulate --schema " + q(fixture_schema()) + " --out " + q(dir / "base")), 0);
  const auto episode = q(dir / "run" / "episode_000");
  EXPECT_EQ(run_cli("kpi " + episode + " --out " + q(dir / "kpis.json")), 0);
  const auto j = nlohmann::json::parse(read_file(dir / "kpis.json"));
  EXPECT_EQ(j["steps"], 24);
  EXPECT_TRUE(j["buildings"].contains("Building_2"));
  EXPECT_EQ(run_cli("kpi " + episode + " --out " + q(dir / "kpis.json")), 2);
  EXPECT_EQ(run_cli("kpi " + episode + " --baseline " + q(dir / "base" / "episode_000") + " --out " + q(dir / "r.csv")), 0);
  EXPECT_EQ(csv::read(dir / "r.csv").header(), (std::vector<std::string>{"level", "name", "kpi", "value"}));
  EXPECT_EQ(run_cli("kpi " + q(dir / "nowhere") + " --out " + q(dir / "k.json")), 2);
}

TEST(Cli, OutageSample) {
  TempDir dir;
  EXPECT_EQ(run_cli("outage-sample --saifi 50 --caidi 120 --seed 3 --days 10 --out " + q(dir / "s.csv")), 0);
  const auto table = csv::read(dir / "s.csv");
  ASSERT_EQ(table.row_count(), 240u);
  std::vector<int> signal;
  for (double v : table.numbers("power_outage")) signal.push_back(static_cast<int>(v));
  EXPECT_EQ(signal, generate_outage_signal({50.0, 120.0, 3}, 240, 3600.0));
  EXPECT_EQ(run_cli("outage-sample --saifi -1 --caidi 120 --out " + q(dir / "t.csv")), 2);
  EXPECT_EQ(run_cli("outage-sample --caidi 120 --out " + q(dir / "t.csv")), 2);
}

TEST(Samples, EveryAgentRunsOnSampleDistrict) {
  TempDir dir;
  const auto schema = samples_dir() / "district" / "schema.json";
  EXPECT_EQ(run_cli("validate " + q(schema)), 0);
  for (const auto& name : agent_names()) {
    RunManifest m;
    m.schema = schema.string();
    m.agent = name;
    m.episodes = name == "q_learning" ? 2 : 1;
    m.out = (dir / name).string();
    if (name == "hour_rbc") m.params["rules"] = nlohmann::json::parse(read_file(samples_dir() / "rules.json"));
    if (name == "q_learning") m.params = nlohmann::json::parse(read_file(samples_dir() / "q_learning.json"));
    const auto result = run_simulation(m);
    ASSERT_EQ(result.kpis.size(), m.episodes) << name;
    EXPECT_EQ(result.kpis.back().steps, 168u) << name;
  }
}
