#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gridflex/dataset.hpp"
#include "gridflex/env.hpp"
#include "gridflex/error.hpp"

namespace gridflex {

/// Flat-array view of an Env for foreign bindings. Observations and actions
/// of all agents are concatenated in agent order; spaces() gives the layout.
class FlatEnv {
 public:
  struct Spaces {
    std::vector<std::size_t> observation_arity;  // per agent
    std::vector<std::size_t> action_arity;
    std::vector<std::string> observation_names;  // "<building>/<name>"
    std::vector<double> observation_low, observation_high;
    std::vector<std::string> action_names;
    std::vector<double> action_low, action_high;
  };

  struct StepOutput {
    std::vector<double> observations;
    std::vector<double> rewards;
    bool terminated = false;
    std::map<std::string, double> info;
  };

  FlatEnv(std::shared_ptr<const District> district, std::optional<std::uint64_t> seed = std::nullopt)
      : env_(std::move(district)), seed_(seed) {
    const auto& buildings = env_.config().buildings;
    for (std::size_t a = 0; a < env_.agent_count(); ++a) {
      const auto& obs = env_.observation_space(a);
      spaces_.observation_arity.push_back(obs.size());
      for (const auto& s : obs) {
        spaces_.observation_names.push_back(buildings[s.building].name + "/" + s.name);
        spaces_.observation_low.push_back(s.low);
        spaces_.observation_high.push_back(s.high);
      }
      const auto& act = env_.action_space(a);
      spaces_.action_arity.push_back(act.size());
      for (const auto& s : act) {
        spaces_.action_names.push_back(buildings[s.building].name + "/" + s.name);
        spaces_.action_low.push_back(s.low);
        spaces_.action_high.push_back(s.high);
      }
    }
  }

  static FlatEnv make(const std::filesystem::path& schema, std::optional<std::uint64_t> seed = std::nullopt) {
    return FlatEnv(std::make_shared<const District>(load_district(schema)), seed);
  }

  const Spaces& spaces() const { return spaces_; }
  const Env& env() const { return env_; }

  std::vector<double> reset() { return flatten(env_.reset(seed_)); }

  StepOutput step(const std::vector<double>& actions) {
    if (actions.size() != spaces_.action_names.size()) {
      throw Error(ErrorKind::ActionArityMismatch, "expected " + std::to_string(spaces_.action_names.size()) +
                                                      " actions, got " + std::to_string(actions.size()));
    }
    Actions nested;
    std::size_t k = 0;
    for (std::size_t n : spaces_.action_arity) {
      nested.emplace_back(actions.begin() + static_cast<std::ptrdiff_t>(k),
                          actions.begin() + static_cast<std::ptrdiff_t>(k + n));
      k += n;
    }
    auto r = env_.step(nested);
    StepOutput out{flatten(r.observations), r.rewards, r.terminated, {}};
    out.info["clipped"] = r.info.clipped ? 1.0 : 0.0;
    out.info["district_net_electricity_consumption"] = r.info.district_net;
    out.info["time_step"] = static_cast<double>(env_.time_step());
    return out;
  }

 private:
  static std::vector<double> flatten(const Observations& obs) {
    std::vector<double> out;
    for (const auto& o : obs) out.insert(out.end(), o.begin(), o.end());
    return out;
  }

  Env env_;
  std::optional<std::uint64_t> seed_;
  Spaces spaces_;
};

}  // namespace gridflex
