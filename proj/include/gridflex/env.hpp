#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gridflex/building.hpp"
#include "gridflex/dataset.hpp"
#include "gridflex/outage.hpp"
#include "gridflex/random.hpp"
#include "gridflex/rewards.hpp"
#include "gridflex/spaces.hpp"
#include "gridflex/trace.hpp"

namespace gridflex {

/// One entry of an agent's observation vector with nominal bounds, used
/// for discretization.
struct ObservationSlot {
  std::size_t building = 0;
  std::string name;
  double low = 0.0;
  double high = 1.0;
};

struct AgentActionSlot : ActionSlot {
  std::size_t building = 0;
};

using Observations = std::vector<std::vector<double>>;  // one vector per agent
using Actions = std::vector<std::vector<double>>;

struct StepInfo {
  bool clipped = false;
  std::vector<std::string> clipped_actions;  // "<building>/<action>"
  std::vector<StepRecord> records;           // one per building
  double district_net = 0.0;                 // shared with every building
};

struct StepResult {
  Observations observations;
  std::vector<double> rewards;  // one per agent
  bool terminated = false;
  StepInfo info;
};

/// Gym-style episode engine over a loaded district. Step call k (1-based)
/// simulates dataset row k-1; the returned observations show the exogenous
/// values of row k (the last row once the episode ends) together with the
/// state reached after the step.
class Env {
 public:
  explicit Env(std::shared_ptr<const District> district, RewardRegistry rewards = RewardRegistry::builtin())
      : district_(std::move(district)), rewards_(std::move(rewards)) {
    const auto& c = district_->config;
    validate(c);
    if (!rewards_.contains(c.reward.name)) throw Error(ErrorKind::ConfigInvalid, "unknown reward function " + c.reward.name);
    for (std::size_t b = 0; b < c.buildings.size(); ++b) {
      buildings_.emplace_back(c.buildings[b], district_->buildings[b], district_->exogenous, c.seconds_per_time_step,
                              district_->steps());
    }
    build_spaces();
    reset();
  }

  const District& district() const { return *district_; }
  const DistrictConfig& config() const { return district_->config; }
  std::size_t building_count() const { return buildings_.size(); }
  const Building& building(std::size_t b) const { return buildings_.at(b); }
  bool central_agent() const { return config().central_agent; }
  std::size_t agent_count() const { return central_agent() ? 1 : buildings_.size(); }
  const std::vector<ObservationSlot>& observation_space(std::size_t agent) const { return observation_space_.at(agent); }
  const std::vector<AgentActionSlot>& action_space(std::size_t agent) const { return action_space_.at(agent); }
  std::size_t time_step() const { return t_; }
  bool terminated() const { return t_ >= district_->steps(); }
  std::uint64_t seed() const { return seed_; }
  const EpisodeTrace& trace() const { return trace_; }

  /// Dataset row the current observations describe.
  std::size_t observed_row() const { return std::min(t_, district_->steps() - 1); }

  double hour(std::size_t building) const {
    return buildings_.at(building).data().series.numeric.at("hour")[observed_row()];
  }

  Observations reset(std::optional<std::uint64_t> seed = std::nullopt) {
    seed_ = seed.value_or(config().random_seed);
    t_ = 0;
    for (std::size_t b = 0; b < buildings_.size(); ++b) {
      const auto& bc = config().buildings[b];
      buildings_[b].reset(derive_seed(seed_, "occupant/" + bc.name), outage_signal(b));
    }
    trace_ = EpisodeTrace{};
    trace_.seconds_per_time_step = config().seconds_per_time_step;
    trace_.seed = seed_;
    for (std::size_t b = 0; b < buildings_.size(); ++b) {
      const auto& bc = config().buildings[b];
      EpisodeTrace::BuildingInfo info{bc.name, bc.comfort_band, {}};
      for (const auto& ev : bc.ev_chargers) info.ev_chargers.push_back(ev.charger.charger_id);
      trace_.buildings.push_back(std::move(info));
    }
    trace_.records.assign(buildings_.size(), {});
    return observe();
  }

  StepResult step(const Actions& actions) {
    if (terminated()) throw Error(ErrorKind::EpisodeFinished, "episode finished after " + std::to_string(t_) + " steps");
    check_arity(actions);
    const std::size_t row = t_;

    StepResult result;
    std::vector<BuildingActions> per_building(buildings_.size());
    for (std::size_t b = 0; b < buildings_.size(); ++b) per_building[b].ev.assign(config().buildings[b].ev_chargers.size(), 0.0);
    for (std::size_t agent = 0; agent < actions.size(); ++agent) {
      const auto& slots = action_space_[agent];
      for (std::size_t i = 0; i < slots.size(); ++i) {
        const auto& slot = slots[i];
        double value = actions[agent][i];
        if (std::isnan(value) && slot.kind == ActionKind::device) {
          // ideal-load sentinel passes through
        } else if (std::isnan(value) || value < slot.low || value > slot.high) {
          value = std::isnan(value) ? 0.0 : std::clamp(value, slot.low, slot.high);
          result.info.clipped = true;
          result.info.clipped_actions.push_back(config().buildings[slot.building].name + "/" + slot.name);
        }
        buildings_[slot.building].set_action(per_building[slot.building], slot.name, value);
      }
    }

    double district_net = 0.0;
    for (std::size_t b = 0; b < buildings_.size(); ++b) {
      result.info.records.push_back(buildings_[b].step(per_building[b]));
      district_net += result.info.records.back().net;
    }
    result.info.district_net = district_net;

    std::vector<double> building_rewards;
    for (std::size_t b = 0; b < buildings_.size(); ++b) {
      const auto& r = result.info.records[b];
      RewardContext ctx;
      ctx.building_net = r.net;
      ctx.district_net = district_net;
      ctx.ess_socs = buildings_[b].storage_socs();
      ctx.indoor_temperature = r.indoor_temperature;
      ctx.setpoint = r.setpoint;
      ctx.comfort_band = config().buildings[b].comfort_band;
      ctx.hvac_mode = r.hvac_mode;
      building_rewards.push_back(rewards_.at(config().reward.name)(ctx, config().reward));
    }
    result.rewards = central_agent() ? std::vector<double>{district_reward(building_rewards)} : building_rewards;

    for (std::size_t b = 0; b < buildings_.size(); ++b) trace_.records[b].push_back(result.info.records[b]);
    trace_.district_net.push_back(district_net);
    trace_.electricity_pricing.push_back(district_->exogenous.at("electricity_pricing")[row]);
    trace_.carbon_intensity.push_back(district_->exogenous.at("carbon_intensity")[row]);
    trace_.rewards.push_back(result.rewards);

    ++t_;
    result.terminated = terminated();
    result.observations = observe();
    return result;
  }

  /// Observation value for one building at the current row and state.
  double observation_value(std::size_t b, const std::string& name) const {
    const auto parsed = parse_observation_name(name);
    if (!parsed) throw Error(ErrorKind::UnknownObservation, name);
    const auto& building = buildings_.at(b);
    const auto& bc = config().buildings[b];
    const auto& series = building.data().series;
    const std::size_t row = observed_row();
    const auto& last = building.last_record();
    const std::string_view base = parsed->info->name;

    if (is_exogenous_observation(name)) return district_->exogenous.at(name)[row];
    if (base == "month" || base == "day_type" || base == "hour" || base == "daylight_savings_status" ||
        base == "cooling_demand" || base == "heating_demand" || base == "dhw_demand" || base == "non_shiftable_load" ||
        base == "indoor_relative_humidity" || base == "occupant_count") {
      return series.numeric.at(std::string(base))[row];
    }
    if (base == "hvac_mode") return static_cast<double>(series.hvac_mode[row]);
    if (base == "power_outage") return building.outage_signal()[row];
    if (base == "cooling_electricity_consumption") return last ? last->cooling_electricity : 0.0;
    if (base == "heating_electricity_consumption") return last ? last->heating_electricity : 0.0;
    if (base == "dhw_electricity_consumption") return last ? last->dhw_electricity : 0.0;
    if (base == "electrical_storage_electricity_consumption") return last ? last->electrical_storage_electricity : 0.0;
    if (base == "net_electricity_consumption") return last ? last->net : 0.0;
    if (base == "cooling_storage_soc") return building.cooling_storage_soc();
    if (base == "heating_storage_soc") return building.heating_storage_soc();
    if (base == "dhw_storage_soc") return building.dhw_storage_soc();
    if (base == "electrical_storage_soc") return building.electrical_storage_soc();
    if (base == "solar_generation") {
      return bc.pv ? bc.pv->nominal_power * series.numeric.at("solar_generation")[row] * building.hours_per_step() : 0.0;
    }
    if (base == "cooling_device_efficiency") return building.device_efficiency(detail::Service::cooling, row);
    if (base == "heating_device_efficiency") return building.device_efficiency(detail::Service::heating, row);
    if (base == "dhw_device_efficiency") return building.device_efficiency(detail::Service::dhw, row);
    if (base == "indoor_dry_bulb_temperature") return building.indoor_temperature();
    if (base == "indoor_dry_bulb_temperature_set_point") return building.setpoint();
    if (base == "indoor_dry_bulb_temperature_delta") return building.indoor_temperature() - building.setpoint();
    if (base == "indoor_dry_bulb_temperature_set_point_override_delta") return building.setpoint_override_delta();

    const std::size_t charger = *find_charger(bc, parsed->charger_id);
    const auto& schedule = building.data().ev_schedules[charger];
    if (base == "electrical_vehicle_charger_state") return static_cast<double>(schedule.charger_state[row]);
    if (base == "electrical_vehicle_soc") return ev_soc(b, charger, row);
    auto column = [&](const char* c) {
      const double v = schedule.numeric.at(c)[row];
      return std::isnan(v) ? -1.0 : v;
    };
    if (base == "electrical_vehicle_estimated_arrival_soc") return column("electric_vehicle_estimated_arrival_soc");
    if (base == "electrical_vehicle_required_departure_soc") return column("electric_vehicle_required_departure_soc");
    if (base == "electrical_vehicle_estimated_arrival_time") return column("electric_vehicle_estimated_arrival_time");
    if (base == "electrical_vehicle_estimated_departure_time") return column("electric_vehicle_estimated_departure_time");
    throw Error(ErrorKind::UnknownObservation, name);
  }

 private:
  std::vector<int> outage_signal(std::size_t b) const {
    const auto& bc = config().buildings[b];
    const auto& series = district_->buildings[b].series;
    const std::size_t n = district_->steps();
    if (series.has_power_outage) {
      const auto& column = series.numeric.at("power_outage");
      std::vector<int> signal(n);
      for (std::size_t t = 0; t < n; ++t) signal[t] = column[t] > 0.5 ? 1 : 0;
      return signal;
    }
    if (!bc.outage_model) return std::vector<int>(n, 0);
    OutageModel model = *bc.outage_model;
    model.seed = derive_seed(seed_ + bc.outage_model->seed, "outage/" + bc.name);
    return generate_outage_signal(model, n, config().seconds_per_time_step);
  }

  /// EV SoC as seen at a row: -1 while away, the arrival SoC on the row the
  /// vehicle plugs in, the battery state otherwise.
  double ev_soc(std::size_t b, std::size_t charger, std::size_t row) const {
    const auto& building = buildings_[b];
    if (!building.ev_connected(charger, row)) return -1.0;
    const auto& ev = building.ev(charger);
    const bool arriving = row > 0 && !building.ev_connected(charger, row - 1) && row >= t_;
    if (arriving) {
      const double arrival =
          building.data().ev_schedules[charger].numeric.at("electric_vehicle_estimated_arrival_soc")[row];
      if (std::isfinite(arrival)) return std::min(arrival, ev.state.capacity / ev.battery.capacity);
    }
    return ev.state.soc(ev.battery);
  }

  void check_arity(const Actions& actions) const {
    if (actions.size() != agent_count()) {
      throw Error(ErrorKind::ActionArityMismatch, "expected " + std::to_string(agent_count()) + " action vectors, got " +
                                                      std::to_string(actions.size()));
    }
    for (std::size_t a = 0; a < actions.size(); ++a) {
      if (actions[a].size() != action_space_[a].size()) {
        throw Error(ErrorKind::ActionArityMismatch, "agent " + std::to_string(a) + " expects " +
                                                        std::to_string(action_space_[a].size()) + " actions, got " +
                                                        std::to_string(actions[a].size()));
      }
    }
  }

  Observations observe() const {
    Observations out(agent_count());
    for (std::size_t agent = 0; agent < agent_count(); ++agent) {
      for (const auto& slot : observation_space_[agent]) out[agent].push_back(observation_value(slot.building, slot.name));
    }
    return out;
  }

  void build_spaces() {
    const std::size_t agents = agent_count();
    observation_space_.assign(agents, {});
    action_space_.assign(agents, {});
    for (std::size_t b = 0; b < buildings_.size(); ++b) {
      const std::size_t agent = central_agent() ? 0 : b;
      const auto& bc = config().buildings[b];
      for (const auto& name : bc.active_observations) {
        auto [low, high] = observation_bounds(b, name);
        observation_space_[agent].push_back({b, name, low, high});
      }
      for (const auto& name : bc.active_actions) {
        AgentActionSlot slot;
        slot.building = b;
        slot.name = name;
        if (name == "cooling_device" || name == "heating_device") {
          slot.kind = ActionKind::device;
          slot.low = 0.0;
        } else if (auto charger = ev_action_charger(bc, name)) {
          slot.low = der::action_lower_bound(bc.ev_chargers[*charger].charger.mode);
        }
        action_space_[agent].push_back(slot);
      }
    }
  }

  std::pair<double, double> observation_bounds(std::size_t b, const std::string& name) const {
    const auto parsed = parse_observation_name(name);
    const std::string_view base = parsed->info->name;
    const auto& bc = config().buildings[b];
    const auto& series = district_->buildings[b].series;
    auto range = [](const std::vector<double>& v) {
      double lo = INFINITY, hi = -INFINITY;
      for (double x : v) {
        if (std::isfinite(x)) lo = std::min(lo, x), hi = std::max(hi, x);
      }
      if (!(lo <= hi)) return std::pair{0.0, 1.0};
      return lo == hi ? std::pair{lo - 1.0, hi + 1.0} : std::pair{lo, hi};
    };
    if (base == "hour") return {0.0, 23.0};
    if (base == "month") return {1.0, 12.0};
    if (base == "day_type") return {1.0, 8.0};
    if (base == "daylight_savings_status" || base == "power_outage") return {0.0, 1.0};
    if (base == "hvac_mode") return {0.0, 2.0};
    if (base.find("_soc") != std::string_view::npos) return {base.rfind("electrical_vehicle", 0) == 0 ? -1.0 : 0.0, 1.0};
    if (base == "electrical_vehicle_charger_state") return {1.0, 3.0};
    if (is_exogenous_observation(name)) return range(district_->exogenous.at(name));
    if (base == "solar_generation") {
      if (!bc.pv) return {0.0, 1.0};
      const double hi = range(series.numeric.at("solar_generation")).second * bc.pv->nominal_power * config().hours_per_step();
      return {0.0, hi > 0.0 ? hi : 1.0};
    }
    // Setpoints move by occupant overrides; predicted temperatures may
    // leave the dataset range, so the model's target range is included.
    auto setpoint = [&] {
      auto [lo, hi] = range(series.numeric.at("indoor_dry_bulb_temperature_set_point"));
      double shift = 0.0;
      for (const auto& c : bc.occupant_model) shift = std::max({shift, c.magnitude_small, c.magnitude_large});
      return std::pair{lo - shift, hi + shift};
    };
    auto temperature = [&] {
      auto [lo, hi] = range(series.numeric.at("indoor_dry_bulb_temperature"));
      if (const auto& lstm = district_->buildings[b].lstm) lo = std::min(lo, lstm->target_min), hi = std::max(hi, lstm->target_max);
      return std::pair{lo, hi};
    };
    if (base == "indoor_dry_bulb_temperature_set_point") return setpoint();
    if (base == "indoor_dry_bulb_temperature") return temperature();
    if (base == "indoor_dry_bulb_temperature_delta") {
      const auto [t_lo, t_hi] = temperature();
      const auto [s_lo, s_hi] = setpoint();
      return {t_lo - s_hi, t_hi - s_lo};
    }
    if (series.numeric.has(std::string(base))) return range(series.numeric.at(std::string(base)));
    if (base == "indoor_dry_bulb_temperature_set_point_override_delta") return {-5.0, 5.0};
    if (base.find("device_efficiency") != std::string_view::npos) return {0.0, 20.0};
    if (base == "electrical_vehicle_estimated_arrival_time" || base == "electrical_vehicle_estimated_departure_time") {
      return {-1.0, static_cast<double>(district_->steps())};
    }
    // Consumption terms: bounded by the largest load plus every flexible source.
    const double dt = config().hours_per_step();
    double scale = 0.0;
    for (std::size_t t = 0; t < district_->steps(); ++t) {
      scale = std::max(scale, series.numeric.at("cooling_demand")[t] + series.numeric.at("heating_demand")[t] +
                                  series.numeric.at("dhw_demand")[t] + series.numeric.at("non_shiftable_load")[t]);
    }
    for (const auto* d : {&bc.cooling_device, &bc.heating_device, &bc.dhw_device}) {
      if (*d) scale += detail::nominal_power(**d) * dt;
    }
    if (bc.electrical_storage) scale += bc.electrical_storage->spec.nominal_power * dt;
    for (const auto& ev : bc.ev_chargers) scale += std::max(ev.charger.nominal_power_charging, ev.charger.nominal_power_discharging) * dt;
    if (bc.pv) scale += bc.pv->nominal_power * dt;
    scale = std::max(scale, 1.0);
    if (base == "net_electricity_consumption" || base == "electrical_storage_electricity_consumption") return {-scale, scale};
    return {0.0, scale};
  }

  std::shared_ptr<const District> district_;
  RewardRegistry rewards_;
  std::vector<Building> buildings_;
  std::vector<std::vector<ObservationSlot>> observation_space_;
  std::vector<std::vector<AgentActionSlot>> action_space_;
  std::uint64_t seed_ = 0;
  std::size_t t_ = 0;
  EpisodeTrace trace_;
};

}  // namespace gridflex
