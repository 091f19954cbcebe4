#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridflex/agents.hpp"
#include "gridflex/dataset.hpp"
#include "gridflex/env.hpp"
#include "gridflex/error.hpp"
#include "gridflex/kpis.hpp"
#include "gridflex/random.hpp"
#include "gridflex/trace.hpp"

namespace gridflex {

#ifndef GRIDFLEX_VERSION
#define GRIDFLEX_VERSION "unknown"
#endif

inline constexpr const char* kEngineVersion = GRIDFLEX_VERSION;

struct RunManifest {
  std::string schema;
  std::string agent = "baseline";
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::size_t episodes = 1;
  std::string out;
  std::string version = kEngineVersion;
};

inline nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["schema"] = m.schema;
  j["agent"] = m.agent;
  j["params"] = m.params;
  j["seed"] = m.seed;
  j["episodes"] = m.episodes;
  j["out"] = m.out;
  j["version"] = m.version;
  return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.schema = j.at("schema").get<std::string>();
    m.agent = j.value("agent", m.agent);
    m.params = j.value("params", nlohmann::json::object());
    m.seed = j.value("seed", m.seed);
    m.episodes = j.value("episodes", m.episodes);
    m.out = j.at("out").get<std::string>();
    m.version = j.value("version", m.version);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, std::string("manifest: ") + e.what());
  }
  return m;
}

inline RunManifest load_manifest(const std::filesystem::path& path) { return manifest_from_json(read_json_file(path)); }

struct RunOptions {
  std::size_t parallel = 1;
  bool force = false;
};

struct RunResult {
  std::vector<std::filesystem::path> episode_dirs;
  std::vector<KPIReport> kpis;  // one per episode
};

inline std::string episode_dir_name(std::size_t episode) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "episode_%03zu", episode);
  return buf;
}

inline std::uint64_t episode_seed(std::uint64_t seed, std::size_t episode) {
  return derive_seed(seed, static_cast<std::uint64_t>(episode));
}

/// Runs one episode to termination and returns its trace.
inline EpisodeTrace run_episode(Env& env, Agent& agent, std::uint64_t seed) {
  auto obs = env.reset(seed);
  while (!env.terminated()) {
    auto actions = agent.act(env, obs);
    auto result = env.step(actions);
    if (agent.learns()) agent.learn(obs, result);
    obs = std::move(result.observations);
  }
  agent.end_episode();
  return env.trace();
}

namespace detail {

inline void prepare_output(const std::filesystem::path& out, bool force) {
  namespace fs = std::filesystem;
  if (fs::exists(out)) {
    if (!fs::is_directory(out)) throw Error(ErrorKind::ConfigInvalid, out.string() + " exists and is not a directory");
    if (!fs::is_empty(out)) {
      if (!force) throw Error(ErrorKind::ConfigInvalid, out.string() + " is not empty; pass --force to overwrite");
      fs::remove_all(out);
    }
  }
  fs::create_directories(out);
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace detail

/// Writes the manifest, then one trace directory per episode and kpis.json.
/// Learning agents carry state across episodes and run sequentially; the
/// others get a fresh agent per episode so episodes may run concurrently.
inline RunResult run_simulation(const RunManifest& manifest, RunOptions options = {}) {
  namespace fs = std::filesystem;
  if (manifest.episodes == 0) throw Error(ErrorKind::ConfigInvalid, "episodes must be at least 1");
  bool known = false;
  for (const auto& n : agent_names()) known = known || n == manifest.agent;
  if (!known) throw Error(ErrorKind::ConfigInvalid, "unknown agent " + manifest.agent);

  auto district = std::make_shared<const District>(load_district(manifest.schema));
  const fs::path out(manifest.out);
  detail::prepare_output(out, options.force);
  detail::write_json(out / "manifest.json", to_json(manifest));

  const std::uint64_t agent_seed = derive_seed(manifest.seed, "agent/" + manifest.agent);
  RunResult result;
  result.episode_dirs.resize(manifest.episodes);
  result.kpis.resize(manifest.episodes);

  auto finish = [&](std::size_t e, const EpisodeTrace& trace) {
    const auto dir = out / episode_dir_name(e);
    write_trace(dir, trace);
    result.episode_dirs[e] = dir;
    result.kpis[e] = compute_kpis(trace);
  };

  Env probe(district);
  if (make_agent(manifest.agent, probe, manifest.params, agent_seed)->learns()) {
    auto agent = make_agent(manifest.agent, probe, manifest.params, agent_seed);
    for (std::size_t e = 0; e < manifest.episodes; ++e) {
      finish(e, run_episode(probe, *agent, episode_seed(manifest.seed, e)));
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      try {
        Env env(district);
        for (std::size_t e = next++; e < manifest.episodes; e = next++) {
          auto agent = make_agent(manifest.agent, env, manifest.params, derive_seed(agent_seed, std::uint64_t{e}));
          finish(e, run_episode(env, *agent, episode_seed(manifest.seed, e)));
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(options.parallel, manifest.episodes));
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  nlohmann::ordered_json kpis = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < manifest.episodes; ++e) {
    auto j = to_json(result.kpis[e]);
    kpis.push_back({{"episode", e}, {"report", j}});
  }
  detail::write_json(out / "kpis.json", kpis);
  return result;
}

}  // namespace gridflex
