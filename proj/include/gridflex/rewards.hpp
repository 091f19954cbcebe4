#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gridflex/error.hpp"
#include "gridflex/spaces.hpp"

namespace gridflex {

struct RewardParams {
  std::string name = "electricity_consumption";
  double consumption_exponent = 1.0;
  double comfort_a = 1.0;
  double comfort_b = 2.0;
  double overcooling_penalty = 1.0;  // multiplier m on cooling-side branches below setpoint

  bool operator==(const RewardParams&) const = default;
};

inline void validate(const RewardParams& p) {
  if (!(p.consumption_exponent >= 0.0 && p.comfort_a >= 0.0 && p.comfort_b >= 0.0)) {
    throw Error(ErrorKind::ConfigInvalid, "reward exponents must be >= 0");
  }
  if (!(p.comfort_a <= p.comfort_b)) throw Error(ErrorKind::ConfigInvalid, "comfort exponents need a <= b");
  if (!(p.overcooling_penalty >= 0.0)) throw Error(ErrorKind::ConfigInvalid, "overcooling_penalty must be >= 0");
}

inline double reward_electricity_consumption(double net, double a) { return -std::pow(std::max(net, 0.0), a); }

inline double reward_marl(double building_net, double district_net) {
  const double sign = building_net < 0.0 ? 1.0 : -1.0;
  return 0.01 * building_net * building_net * std::max(district_net, 0.0) * sign;
}

/// sign(0) is taken as 0, so an exactly balanced building scores 0.
inline double reward_solar_penalty(double net, std::span<const double> ess_socs) {
  const double sign = net > 0.0 ? 1.0 : (net < 0.0 ? -1.0 : 0.0);
  double reward = 0.0;
  for (double soc : ess_socs) reward -= (1.0 + sign * soc) * std::abs(net);
  return reward;
}

/// Piecewise comfort penalty. With hvac off none of the mode-specific
/// branches apply and the final branch is used.
inline double reward_comfort(double t_in, double t_spt, double band, HvacMode mode, double a, double b,
                             double overcooling = 1.0) {
  const double delta = std::abs(t_in - t_spt);
  const bool cooling = mode == HvacMode::cooling;
  const bool heating = mode == HvacMode::heating;
  if (t_in < t_spt - band) {
    if (cooling) return -overcooling * std::pow(delta, b);
    if (heating) return -std::pow(delta, a);
  } else if (t_in < t_spt) {
    if (cooling) return -overcooling * delta;
    if (heating) return 0.0;
  } else if (t_in <= t_spt + band) {
    if (cooling) return 0.0;
    if (heating) return -delta;
  } else if (cooling) {
    return -std::pow(delta, a);
  }
  return -std::pow(delta, b);
}

inline double district_reward(std::span<const double> building_rewards) {
  if (building_rewards.empty()) throw Error(ErrorKind::EmptyDistrict, "no building rewards");
  return std::accumulate(building_rewards.begin(), building_rewards.end(), 0.0);
}

/// Everything a building-level reward may look at after a step.
struct RewardContext {
  double building_net = 0.0;
  double district_net = 0.0;
  std::vector<double> ess_socs;
  double indoor_temperature = 0.0;
  double setpoint = 0.0;
  double comfort_band = 2.0;
  HvacMode hvac_mode = HvacMode::off;
};

using RewardFunction = std::function<double(const RewardContext&, const RewardParams&)>;

class RewardRegistry {
 public:
  static RewardRegistry builtin() {
    RewardRegistry r;
    r.add("electricity_consumption", [](const RewardContext& c, const RewardParams& p) {
      return reward_electricity_consumption(c.building_net, p.consumption_exponent);
    });
    r.add("marl", [](const RewardContext& c, const RewardParams&) { return reward_marl(c.building_net, c.district_net); });
    r.add("solar_penalty",
          [](const RewardContext& c, const RewardParams&) { return reward_solar_penalty(c.building_net, c.ess_socs); });
    r.add("comfort", [](const RewardContext& c, const RewardParams& p) {
      return reward_comfort(c.indoor_temperature, c.setpoint, c.comfort_band, c.hvac_mode, p.comfort_a, p.comfort_b,
                            p.overcooling_penalty);
    });
    return r;
  }

  void add(std::string name, RewardFunction fn) { functions_[std::move(name)] = std::move(fn); }

  bool contains(const std::string& name) const { return functions_.count(name) > 0; }

  const RewardFunction& at(const std::string& name) const {
    auto it = functions_.find(name);
    if (it == functions_.end()) throw Error(ErrorKind::ConfigInvalid, "unknown reward function " + name);
    return it->second;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, fn] : functions_) out.push_back(name);
    return out;
  }

 private:
  std::map<std::string, RewardFunction> functions_;
};

}  // namespace gridflex
