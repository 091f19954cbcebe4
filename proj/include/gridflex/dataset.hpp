#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridflex/csv.hpp"
#include "gridflex/der.hpp"
#include "gridflex/error.hpp"
#include "gridflex/lstm.hpp"
#include "gridflex/occupant.hpp"
#include "gridflex/outage.hpp"
#include "gridflex/rewards.hpp"
#include "gridflex/spaces.hpp"

namespace gridflex {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

enum class HourConvention { automatic, one_based, zero_based };

using ThermalDevice = std::variant<der::HeatPumpSpec, der::ElectricHeaterSpec>;

struct StorageConfig {
  der::ThermalStorageSpec spec;
  double initial_soc = 0.0;
};

struct BatteryConfig {
  der::BatterySpec spec;
  double initial_soc = 0.0;
};

struct PVConfig {
  double nominal_power = 0.0;
};

struct EVChargerConfig {
  der::EVChargerSpec charger;
  std::string schedule;  // CSV path, relative to the schema
  der::BatterySpec ev_battery;
  double initial_soc = 0.0;
};

struct BuildingConfig {
  std::string name;
  std::string energy_simulation;  // CSV path, relative to the schema
  std::vector<std::string> active_observations;
  std::vector<std::string> active_actions;
  double comfort_band = 2.0;
  std::optional<std::string> lstm_model;
  std::vector<OccupantCoefficients> occupant_model;
  std::optional<OutageModel> outage_model;
  std::optional<ThermalDevice> cooling_device;
  std::optional<ThermalDevice> heating_device;
  std::optional<ThermalDevice> dhw_device;
  std::optional<StorageConfig> cooling_storage;
  std::optional<StorageConfig> heating_storage;
  std::optional<StorageConfig> dhw_storage;
  std::optional<BatteryConfig> electrical_storage;
  std::optional<PVConfig> pv;
  std::vector<EVChargerConfig> ev_chargers;
};

struct DistrictConfig {
  double seconds_per_time_step = 3600.0;
  std::size_t episode_time_steps = 0;
  std::string weather;
  std::string pricing;
  std::string carbon_intensity;
  HourConvention hour_convention = HourConvention::automatic;
  RewardParams reward;
  bool central_agent = false;
  std::uint64_t random_seed = 0;
  std::vector<BuildingConfig> buildings;

  double hours_per_step() const { return seconds_per_time_step / 3600.0; }
};

/// Index of a charger within the building, resolving bare names to the first.
inline std::optional<std::size_t> find_charger(const BuildingConfig& b, const std::string& charger_id) {
  if (charger_id.empty()) return b.ev_chargers.empty() ? std::nullopt : std::optional<std::size_t>(0);
  for (std::size_t i = 0; i < b.ev_chargers.size(); ++i) {
    if (b.ev_chargers[i].charger.charger_id == charger_id) return i;
  }
  return std::nullopt;
}

inline constexpr std::string_view kEVActionPrefix = "electric_vehicle_storage";

/// Charger index addressed by an EV action name, or nullopt when the name is
/// not an EV action or the charger does not exist.
inline std::optional<std::size_t> ev_action_charger(const BuildingConfig& b, std::string_view name) {
  if (name.substr(0, kEVActionPrefix.size()) != kEVActionPrefix) return std::nullopt;
  if (name.size() == kEVActionPrefix.size()) return find_charger(b, "");
  if (name[kEVActionPrefix.size()] != '_') return std::nullopt;
  return find_charger(b, std::string(name.substr(kEVActionPrefix.size() + 1)));
}

inline bool building_has_action(const BuildingConfig& b, const std::string& name) {
  if (name == "cooling_storage") return b.cooling_storage.has_value();
  if (name == "heating_storage") return b.heating_storage.has_value();
  if (name == "dhw_storage") return b.dhw_storage.has_value();
  if (name == "electrical_storage") return b.electrical_storage.has_value();
  if (name == "cooling_device") return b.cooling_device.has_value();
  if (name == "heating_device") return b.heating_device.has_value();
  return ev_action_charger(b, name).has_value();
}

inline void validate(const DistrictConfig& c) {
  if (!(c.seconds_per_time_step > 0.0)) throw Error(ErrorKind::ConfigInvalid, "seconds_per_time_step must be > 0");
  if (c.episode_time_steps < 1) throw Error(ErrorKind::ConfigInvalid, "episode_time_steps must be >= 1");
  if (c.buildings.empty()) throw Error(ErrorKind::EmptyDistrict, "schema lists no buildings");
  validate(c.reward);
  std::set<std::string> names;
  for (const auto& b : c.buildings) {
    if (b.name.empty()) throw Error(ErrorKind::ConfigInvalid, "building name must not be empty");
    if (!names.insert(b.name).second) throw Error(ErrorKind::ConfigInvalid, "duplicate building " + b.name);
    const std::string where = "building " + b.name + ": ";
    if (!(b.comfort_band >= 0.0)) throw Error(ErrorKind::ConfigInvalid, where + "comfort_band must be >= 0");
    for (const auto& o : b.occupant_model) validate(o);
    if (b.outage_model) validate(*b.outage_model);
    if (b.cooling_device && !std::holds_alternative<der::HeatPumpSpec>(*b.cooling_device)) {
      throw Error(ErrorKind::ConfigInvalid, where + "cooling_device must be a heat pump");
    }
    for (const auto* device : {&b.cooling_device, &b.heating_device, &b.dhw_device}) {
      if (*device) std::visit([](const auto& spec) { der::validate(spec); }, **device);
    }
    for (const auto* storage : {&b.cooling_storage, &b.heating_storage, &b.dhw_storage}) {
      if (!*storage) continue;
      der::validate((*storage)->spec);
      if (!((*storage)->initial_soc >= 0.0 && (*storage)->initial_soc <= 1.0)) {
        throw Error(ErrorKind::ConfigInvalid, where + "storage initial_soc must be in [0, 1]");
      }
    }
    if (b.electrical_storage) {
      der::validate(b.electrical_storage->spec);
      if (!(b.electrical_storage->initial_soc >= 0.0 && b.electrical_storage->initial_soc <= 1.0)) {
        throw Error(ErrorKind::ConfigInvalid, where + "electrical_storage initial_soc must be in [0, 1]");
      }
    }
    if (b.pv && !(b.pv->nominal_power >= 0.0)) throw Error(ErrorKind::ConfigInvalid, where + "pv nominal_power must be >= 0");
    std::set<std::string> chargers;
    for (const auto& ev : b.ev_chargers) {
      der::validate(ev.charger);
      der::validate(ev.ev_battery);
      if (!chargers.insert(ev.charger.charger_id).second) {
        throw Error(ErrorKind::ConfigInvalid, where + "duplicate charger " + ev.charger.charger_id);
      }
      if (!(ev.initial_soc >= 0.0 && ev.initial_soc <= 1.0)) {
        throw Error(ErrorKind::ConfigInvalid, where + "ev initial_soc must be in [0, 1]");
      }
    }
    std::set<std::string> seen;
    for (const auto& a : b.active_actions) {
      if (!seen.insert(a).second) throw Error(ErrorKind::ConfigInvalid, where + "duplicate action " + a);
      if (!building_has_action(b, a)) {
        throw Error(ErrorKind::UnknownAction, where + a + " does not refer to a configured device");
      }
    }
    for (const auto& o : b.active_observations) {
      const auto parsed = parse_observation_name(o);
      if (!parsed) throw Error(ErrorKind::UnknownObservation, where + o);
      if (parsed->info->per_charger && !find_charger(b, parsed->charger_id)) {
        throw Error(ErrorKind::UnknownObservation, where + o + " names no configured charger");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// JSON schema

namespace detail {

/// Reads an object's keys and rejects any key that was never asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) fail("must be an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& at(const std::string& key) {
    if (!has(key)) fail("missing key " + key);
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    try {
      return at(key).get<T>();
    } catch (const json::exception& e) {
      fail(key + ": " + e.what());
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) fail("unknown key " + key);
    }
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw Error(ErrorKind::ConfigInvalid, context_ + ": " + message);
  }

  const std::string& context() const { return context_; }

 private:
  const json& j_;
  std::string context_;
  std::set<std::string> used_;
};

inline PiecewiseLinearCurve read_curve(ObjectReader& r, const std::string& key) {
  if (!r.has(key)) return PiecewiseLinearCurve::constant(1.0);
  const auto points = r.get<std::vector<std::pair<double, double>>>(key);
  return PiecewiseLinearCurve(points);
}

inline ThermalDevice read_device(const json& j, const std::string& context) {
  ObjectReader r(j, context);
  const auto type = r.get<std::string>("type");
  if (type == "heat_pump") {
    der::HeatPumpSpec s;
    s.nominal_power = r.get<double>("nominal_power");
    s.technical_efficiency = r.get("technical_efficiency", s.technical_efficiency);
    s.supply_temperature_cooling = r.get("supply_temperature_cooling", s.supply_temperature_cooling);
    s.supply_temperature_heating = r.get("supply_temperature_heating", s.supply_temperature_heating);
    s.cop_max = r.get("cop_max", s.cop_max);
    r.finish();
    return s;
  }
  if (type == "electric_heater") {
    der::ElectricHeaterSpec s;
    s.nominal_power = r.get<double>("nominal_power");
    s.technical_efficiency = r.get("technical_efficiency", s.technical_efficiency);
    r.finish();
    return s;
  }
  r.fail("unknown device type " + type);
}

inline json write_device(const ThermalDevice& device) {
  if (const auto* hp = std::get_if<der::HeatPumpSpec>(&device)) {
    return {{"type", "heat_pump"},
            {"nominal_power", hp->nominal_power},
            {"technical_efficiency", hp->technical_efficiency},
            {"supply_temperature_cooling", hp->supply_temperature_cooling},
            {"supply_temperature_heating", hp->supply_temperature_heating},
            {"cop_max", hp->cop_max}};
  }
  const auto& eh = std::get<der::ElectricHeaterSpec>(device);
  return {{"type", "electric_heater"}, {"nominal_power", eh.nominal_power}, {"technical_efficiency", eh.technical_efficiency}};
}

inline StorageConfig read_storage(const json& j, const std::string& context) {
  ObjectReader r(j, context);
  StorageConfig s;
  s.spec.capacity = r.get<double>("capacity");
  s.spec.loss_coefficient = r.get("loss_coefficient", 0.0);
  s.spec.technical_efficiency = r.get("technical_efficiency", 1.0);
  s.initial_soc = r.get("initial_soc", 0.0);
  r.finish();
  return s;
}

inline json write_storage(const StorageConfig& s) {
  return {{"capacity", s.spec.capacity},
          {"loss_coefficient", s.spec.loss_coefficient},
          {"technical_efficiency", s.spec.technical_efficiency},
          {"initial_soc", s.initial_soc}};
}

inline der::BatterySpec read_battery_spec(ObjectReader& r) {
  der::BatterySpec s;
  s.capacity = r.get<double>("capacity");
  s.nominal_power = r.get<double>("nominal_power");
  s.depth_of_discharge = r.get("depth_of_discharge", 1.0);
  s.loss_coefficient = r.get("loss_coefficient", 0.0);
  s.capacity_loss_coefficient = r.get("capacity_loss_coefficient", 0.0);
  s.power_efficiency_curve = read_curve(r, "power_efficiency_curve");
  s.capacity_power_curve = read_curve(r, "capacity_power_curve");
  return s;
}

inline json write_battery_spec(const der::BatterySpec& s) {
  return {{"capacity", s.capacity},
          {"nominal_power", s.nominal_power},
          {"depth_of_discharge", s.depth_of_discharge},
          {"loss_coefficient", s.loss_coefficient},
          {"capacity_loss_coefficient", s.capacity_loss_coefficient},
          {"power_efficiency_curve", s.power_efficiency_curve.points()},
          {"capacity_power_curve", s.capacity_power_curve.points()}};
}

inline der::ChargerMode read_charger_mode(const std::string& text, const ObjectReader& r) {
  if (text == "v2g") return der::ChargerMode::v2g;
  if (text == "g2v") return der::ChargerMode::g2v;
  if (text == "no_control") return der::ChargerMode::no_control;
  r.fail("unknown charger mode " + text);
}

inline std::string to_string(der::ChargerMode mode) {
  switch (mode) {
    case der::ChargerMode::v2g: return "v2g";
    case der::ChargerMode::no_control: return "no_control";
    case der::ChargerMode::g2v: break;
  }
  return "g2v";
}

inline OccupantCoefficients read_occupant(const json& j, const std::string& context) {
  ObjectReader r(j, context);
  OccupantCoefficients c;
  c.a = r.get<double>("a");
  c.b = r.get<double>("b");
  const auto direction = r.get<std::string>("direction", "increase");
  if (direction == "increase") {
    c.direction = OverrideDirection::increase;
  } else if (direction == "decrease") {
    c.direction = OverrideDirection::decrease;
  } else {
    r.fail("direction must be increase or decrease");
  }
  c.magnitude_small = r.get("magnitude_small", c.magnitude_small);
  c.magnitude_large = r.get("magnitude_large", c.magnitude_large);
  c.p_large = r.get("p_large", c.p_large);
  c.months = r.get("months", std::vector<int>{});
  r.finish();
  return c;
}

inline json write_occupant(const OccupantCoefficients& c) {
  return {{"a", c.a},
          {"b", c.b},
          {"direction", c.direction == OverrideDirection::increase ? "increase" : "decrease"},
          {"magnitude_small", c.magnitude_small},
          {"magnitude_large", c.magnitude_large},
          {"p_large", c.p_large},
          {"months", c.months}};
}

inline BuildingConfig read_building(const json& j, std::size_t index) {
  ObjectReader r(j, "buildings[" + std::to_string(index) + "]");
  BuildingConfig b;
  b.name = r.get<std::string>("name");
  const std::string ctx = "building " + b.name;
  b.energy_simulation = r.get<std::string>("energy_simulation");
  b.active_observations = r.get("active_observations", std::vector<std::string>{});
  b.active_actions = r.get("active_actions", std::vector<std::string>{});
  b.comfort_band = r.get("comfort_band", 2.0);
  if (r.has("lstm_model")) b.lstm_model = r.get<std::string>("lstm_model");
  if (r.has("occupant_model")) {
    const auto& occ = r.at("occupant_model");
    if (occ.is_array()) {
      for (std::size_t i = 0; i < occ.size(); ++i) b.occupant_model.push_back(read_occupant(occ[i], ctx + " occupant_model"));
    } else {
      b.occupant_model.push_back(read_occupant(occ, ctx + " occupant_model"));
    }
  }
  if (r.has("outage_model")) {
    ObjectReader o(r.at("outage_model"), ctx + " outage_model");
    OutageModel m;
    m.saifi = o.get<double>("saifi");
    m.caidi = o.get("caidi", 0.0);
    m.seed = o.get("seed", std::uint64_t{0});
    o.finish();
    b.outage_model = m;
  }
  if (r.has("cooling_device")) b.cooling_device = read_device(r.at("cooling_device"), ctx + " cooling_device");
  if (r.has("heating_device")) b.heating_device = read_device(r.at("heating_device"), ctx + " heating_device");
  if (r.has("dhw_device")) b.dhw_device = read_device(r.at("dhw_device"), ctx + " dhw_device");
  if (r.has("cooling_storage")) b.cooling_storage = read_storage(r.at("cooling_storage"), ctx + " cooling_storage");
  if (r.has("heating_storage")) b.heating_storage = read_storage(r.at("heating_storage"), ctx + " heating_storage");
  if (r.has("dhw_storage")) b.dhw_storage = read_storage(r.at("dhw_storage"), ctx + " dhw_storage");
  if (r.has("electrical_storage")) {
    ObjectReader e(r.at("electrical_storage"), ctx + " electrical_storage");
    BatteryConfig bc;
    bc.spec = read_battery_spec(e);
    bc.initial_soc = e.get("initial_soc", 0.0);
    e.finish();
    b.electrical_storage = bc;
  }
  if (r.has("pv")) {
    ObjectReader p(r.at("pv"), ctx + " pv");
    b.pv = PVConfig{p.get<double>("nominal_power")};
    p.finish();
  }
  if (r.has("ev_chargers")) {
    const auto& list = r.at("ev_chargers");
    if (!list.is_array()) r.fail("ev_chargers must be a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      ObjectReader c(list[i], ctx + " ev_chargers[" + std::to_string(i) + "]");
      EVChargerConfig ev;
      ev.charger.charger_id = c.get<std::string>("charger_id");
      ev.charger.nominal_power_charging = c.get<double>("nominal_power_charging");
      ev.charger.nominal_power_discharging = c.get<double>("nominal_power_discharging");
      ev.charger.technical_efficiency = c.get("technical_efficiency", 1.0);
      ev.charger.mode = read_charger_mode(c.get<std::string>("mode", "g2v"), c);
      ev.schedule = c.get<std::string>("schedule");
      ObjectReader battery(c.at("ev_battery"), c.context() + " ev_battery");
      ev.ev_battery = read_battery_spec(battery);
      battery.finish();
      ev.initial_soc = c.get("initial_soc", 0.0);
      c.finish();
      b.ev_chargers.push_back(std::move(ev));
    }
  }
  r.finish();
  return b;
}

}  // namespace detail

inline DistrictConfig parse_config(const json& j) {
  detail::ObjectReader r(j, "schema");
  DistrictConfig c;
  c.seconds_per_time_step = r.get("seconds_per_time_step", 3600.0);
  c.episode_time_steps = r.get<std::size_t>("episode_time_steps");
  c.weather = r.get<std::string>("weather");
  c.pricing = r.get<std::string>("pricing");
  c.carbon_intensity = r.get<std::string>("carbon_intensity");
  const auto convention = r.get<std::string>("hour_convention", "auto");
  if (convention == "auto") {
    c.hour_convention = HourConvention::automatic;
  } else if (convention == "one_based") {
    c.hour_convention = HourConvention::one_based;
  } else if (convention == "zero_based") {
    c.hour_convention = HourConvention::zero_based;
  } else {
    r.fail("hour_convention must be auto, one_based or zero_based");
  }
  if (r.has("reward_function")) {
    detail::ObjectReader w(r.at("reward_function"), "reward_function");
    c.reward.name = w.get<std::string>("name", c.reward.name);
    c.reward.consumption_exponent = w.get("consumption_exponent", c.reward.consumption_exponent);
    if (w.has("comfort_exponents")) {
      const auto ab = w.get<std::vector<double>>("comfort_exponents");
      if (ab.size() != 2) w.fail("comfort_exponents must be [a, b]");
      c.reward.comfort_a = ab[0];
      c.reward.comfort_b = ab[1];
    }
    c.reward.overcooling_penalty = w.get("overcooling_penalty", c.reward.overcooling_penalty);
    w.finish();
  }
  c.central_agent = r.get("central_agent", false);
  c.random_seed = r.get("random_seed", std::uint64_t{0});
  const auto& buildings = r.at("buildings");
  if (!buildings.is_array()) r.fail("buildings must be a list");
  for (std::size_t i = 0; i < buildings.size(); ++i) c.buildings.push_back(detail::read_building(buildings[i], i));
  r.finish();
  validate(c);
  return c;
}

/// Writes every field, defaults included.
inline json to_json(const DistrictConfig& c) {
  json j;
  j["seconds_per_time_step"] = c.seconds_per_time_step;
  j["episode_time_steps"] = c.episode_time_steps;
  j["weather"] = c.weather;
  j["pricing"] = c.pricing;
  j["carbon_intensity"] = c.carbon_intensity;
  j["hour_convention"] = c.hour_convention == HourConvention::one_based    ? "one_based"
                         : c.hour_convention == HourConvention::zero_based ? "zero_based"
                                                                            : "auto";
  j["reward_function"] = {{"name", c.reward.name},
                          {"consumption_exponent", c.reward.consumption_exponent},
                          {"comfort_exponents", {c.reward.comfort_a, c.reward.comfort_b}},
                          {"overcooling_penalty", c.reward.overcooling_penalty}};
  j["central_agent"] = c.central_agent;
  j["random_seed"] = c.random_seed;
  j["buildings"] = json::array();
  for (const auto& b : c.buildings) {
    json jb;
    jb["name"] = b.name;
    jb["energy_simulation"] = b.energy_simulation;
    jb["active_observations"] = b.active_observations;
    jb["active_actions"] = b.active_actions;
    jb["comfort_band"] = b.comfort_band;
    if (b.lstm_model) jb["lstm_model"] = *b.lstm_model;
    if (!b.occupant_model.empty()) {
      jb["occupant_model"] = json::array();
      for (const auto& o : b.occupant_model) jb["occupant_model"].push_back(detail::write_occupant(o));
    }
    if (b.outage_model) {
      jb["outage_model"] = {{"saifi", b.outage_model->saifi}, {"caidi", b.outage_model->caidi}, {"seed", b.outage_model->seed}};
    }
    if (b.cooling_device) jb["cooling_device"] = detail::write_device(*b.cooling_device);
    if (b.heating_device) jb["heating_device"] = detail::write_device(*b.heating_device);
    if (b.dhw_device) jb["dhw_device"] = detail::write_device(*b.dhw_device);
    if (b.cooling_storage) jb["cooling_storage"] = detail::write_storage(*b.cooling_storage);
    if (b.heating_storage) jb["heating_storage"] = detail::write_storage(*b.heating_storage);
    if (b.dhw_storage) jb["dhw_storage"] = detail::write_storage(*b.dhw_storage);
    if (b.electrical_storage) {
      auto e = detail::write_battery_spec(b.electrical_storage->spec);
      e["initial_soc"] = b.electrical_storage->initial_soc;
      jb["electrical_storage"] = e;
    }
    if (b.pv) jb["pv"] = {{"nominal_power", b.pv->nominal_power}};
    if (!b.ev_chargers.empty()) {
      jb["ev_chargers"] = json::array();
      for (const auto& ev : b.ev_chargers) {
        jb["ev_chargers"].push_back({{"charger_id", ev.charger.charger_id},
                                     {"nominal_power_charging", ev.charger.nominal_power_charging},
                                     {"nominal_power_discharging", ev.charger.nominal_power_discharging},
                                     {"technical_efficiency", ev.charger.technical_efficiency},
                                     {"mode", detail::to_string(ev.charger.mode)},
                                     {"schedule", ev.schedule},
                                     {"ev_battery", detail::write_battery_spec(ev.ev_battery)},
                                     {"initial_soc", ev.initial_soc}});
      }
    }
    j["buildings"].push_back(std::move(jb));
  }
  return j;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

inline DistrictConfig load_config(const std::filesystem::path& path) { return parse_config(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Time series

/// Numeric columns keyed by name, all of one length.
class SeriesTable {
 public:
  std::string source;

  std::size_t length() const { return length_; }
  bool has(const std::string& name) const { return columns_.count(name) > 0; }

  const std::vector<double>& at(const std::string& name) const {
    auto it = columns_.find(name);
    if (it == columns_.end()) throw Error(ErrorKind::ColumnMissing, name + " in " + source);
    return it->second;
  }

  const std::vector<double>* find(const std::string& name) const {
    auto it = columns_.find(name);
    return it == columns_.end() ? nullptr : &it->second;
  }

  void set(const std::string& name, std::vector<double> values) {
    if (columns_.empty()) length_ = values.size();
    if (values.size() != length_) throw Error(ErrorKind::LengthMismatch, source + " column " + name);
    columns_[name] = std::move(values);
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, v] : columns_) out.push_back(name);
    return out;
  }

 private:
  std::map<std::string, std::vector<double>> columns_;
  std::size_t length_ = 0;
};

inline constexpr std::array<const char*, 12> kBuildingColumns = {
    "month",         "day_type",          "hour",           "daylight_savings_status",
    "cooling_demand", "heating_demand",   "dhw_demand",     "non_shiftable_load",
    "indoor_dry_bulb_temperature", "indoor_dry_bulb_temperature_set_point", "indoor_relative_humidity",
    "occupant_count"};

inline constexpr std::array<const char*, 4> kWeatherColumns = {
    "outdoor_dry_bulb_temperature", "outdoor_relative_humidity", "diffuse_solar_irradiance",
    "direct_solar_irradiance"};

/// True for observations read from the weather, pricing or carbon files.
inline bool is_exogenous_observation(const std::string& name) {
  for (const char* base : {"outdoor_dry_bulb_temperature", "outdoor_relative_humidity", "diffuse_solar_irradiance",
                           "direct_solar_irradiance", "carbon_intensity", "electricity_pricing"}) {
    if (name.rfind(base, 0) == 0) return true;
  }
  return false;
}

inline constexpr std::array<const char*, 3> kForecastSuffixes = {"_predicted_6h", "_predicted_12h",
                                                                 "_predicted_24h"};

struct BuildingTimeSeries {
  SeriesTable numeric;  // hour already normalized to 0..23
  std::vector<HvacMode> hvac_mode;
  bool has_power_outage = false;
  bool has_solar_generation = false;
};

enum class ChargerState { connected = 1, incoming = 2, away = 3 };

struct EVSchedule {
  std::string source;
  std::vector<ChargerState> charger_state;
  SeriesTable numeric;  // arrival/departure times and SoCs, NaN when empty
};

inline constexpr std::array<const char*, 4> kEVColumns = {
    "electric_vehicle_estimated_arrival_time", "electric_vehicle_estimated_departure_time",
    "electric_vehicle_estimated_arrival_soc", "electric_vehicle_required_departure_soc"};

struct Violation {
  std::string source;
  std::string column;
  std::size_t row = 0;  // 0-based data row
  std::string value;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool empty() const { return violations.empty(); }
  void add(Violation v) { violations.push_back(std::move(v)); }
  void merge(const ValidationReport& other) {
    violations.insert(violations.end(), other.violations.begin(), other.violations.end());
  }
};

inline std::string describe(const Violation& v) {
  return v.source + " row " + std::to_string(v.row) + " column " + v.column + " value '" + v.value + "': " + v.message;
}

namespace detail {

struct Rule {
  double lo = -INFINITY;
  double hi = INFINITY;
  bool integer = false;
  const char* message = "must be a finite number";
};

inline Rule column_rule(const std::string& name) {
  auto starts = [&](const char* prefix) { return name.rfind(prefix, 0) == 0; };
  if (name == "cooling_demand" || name == "heating_demand" || name == "dhw_demand" || name == "non_shiftable_load") {
    return {0.0, INFINITY, false, "demand must be >= 0"};
  }
  if (name == "occupant_count") return {0.0, INFINITY, false, "occupant_count must be >= 0"};
  if (name == "solar_generation") return {0.0, INFINITY, false, "solar_generation must be >= 0"};
  if (starts("indoor_relative_humidity") || starts("outdoor_relative_humidity")) {
    return {0.0, 100.0, false, "humidity must be in [0, 100]"};
  }
  if (starts("diffuse_solar_irradiance") || starts("direct_solar_irradiance")) {
    return {0.0, INFINITY, false, "irradiance must be >= 0"};
  }
  if (name == "month") return {1.0, 12.0, true, "month must be an integer in 1..12"};
  if (name == "day_type") return {1.0, 8.0, true, "day_type must be an integer in 1..8"};
  if (name == "daylight_savings_status") return {0.0, 1.0, true, "daylight_savings_status must be 0 or 1"};
  if (name == "power_outage") return {0.0, 1.0, true, "power_outage must be 0 or 1"};
  if (name == "hour") return {0.0, 24.0, true, "hour must be an integer in 0..24"};
  return {};
}

inline void check_column(ValidationReport& report, const std::string& source, const std::string& column,
                         const std::vector<double>& values, const csv::Table* raw) {
  const Rule rule = column_rule(column);
  const auto raw_index = raw ? raw->find(column) : std::nullopt;
  for (std::size_t row = 0; row < values.size(); ++row) {
    const double v = values[row];
    const bool ok = std::isfinite(v) && v >= rule.lo && v <= rule.hi && (!rule.integer || v == std::floor(v));
    if (ok) continue;
    const std::string text = raw_index ? raw->cell(row, *raw_index) : csv::format_number(v);
    report.add({source, column, row, text, std::isfinite(v) ? rule.message : "not a number"});
  }
}

inline void check_table(ValidationReport& report, const SeriesTable& table, const csv::Table* raw) {
  for (const auto& name : table.names()) check_column(report, table.source, name, table.at(name), raw);
}

}  // namespace detail

/// Hour convention resolved for one hour column: any 24 means 1..24, else
/// any 0 means 0..23, else 1..24.
inline HourConvention detect_hour_convention(const std::vector<double>& hours) {
  if (std::find(hours.begin(), hours.end(), 24.0) != hours.end()) return HourConvention::one_based;
  if (std::find(hours.begin(), hours.end(), 0.0) != hours.end()) return HourConvention::zero_based;
  return HourConvention::one_based;
}

inline ValidationReport validate_series(const SeriesTable& table) {
  ValidationReport report;
  detail::check_table(report, table, nullptr);
  return report;
}

inline ValidationReport validate_series(const BuildingTimeSeries& s) { return validate_series(s.numeric); }

inline ValidationReport validate_series(const EVSchedule& s) {
  ValidationReport report;
  for (const char* name : {"electric_vehicle_estimated_arrival_soc", "electric_vehicle_required_departure_soc"}) {
    const auto& v = s.numeric.at(name);
    for (std::size_t row = 0; row < v.size(); ++row) {
      if (!std::isnan(v[row]) && !(v[row] >= 0.0 && v[row] <= 1.0)) {
        report.add({s.source, name, row, csv::format_number(v[row]), "SoC must be in [0, 1]"});
      }
    }
  }
  const auto& arrival = s.numeric.at("electric_vehicle_estimated_arrival_time");
  const auto& departure = s.numeric.at("electric_vehicle_estimated_departure_time");
  for (std::size_t row = 0; row < arrival.size(); ++row) {
    if (!std::isnan(arrival[row]) && !std::isnan(departure[row]) && !(departure[row] > arrival[row])) {
      report.add({s.source, "electric_vehicle_estimated_departure_time", row, csv::format_number(departure[row]),
                  "departure must be after arrival"});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// District loading

struct BuildingData {
  BuildingTimeSeries series;
  std::optional<LstmModel> lstm;
  std::vector<EVSchedule> ev_schedules;  // one per charger, in config order
};

/// A validated district: configuration plus every series, truncated to the
/// episode length. Immutable once loaded.
struct District {
  DistrictConfig config;
  std::filesystem::path base_dir;
  SeriesTable exogenous;  // weather, pricing and carbon columns by observation name
  std::vector<BuildingData> buildings;
  ValidationReport report;

  std::size_t steps() const { return config.episode_time_steps; }
};

struct LoadOptions {
  bool lenient = false;
};

namespace detail {

inline csv::Table read_table(const std::filesystem::path& path, std::size_t expected) {
  auto table = csv::read(path);
  if (table.row_count() < expected) {
    throw Error(ErrorKind::LengthMismatch, path.string() + ": expected " + std::to_string(expected) + " rows, got " +
                                               std::to_string(table.row_count()));
  }
  return table;
}

inline std::vector<double> head(std::vector<double> v, std::size_t n) {
  v.resize(n);
  return v;
}

inline void bind_columns(SeriesTable& out, const csv::Table& table, std::size_t n, std::span<const char* const> required,
                         ValidationReport& report) {
  for (const char* name : required) {
    auto values = head(table.numbers(name), n);
    check_column(report, out.source, name, values, &table);
    out.set(name, std::move(values));
  }
}

inline void bind_optional(SeriesTable& out, const csv::Table& table, std::size_t n, const std::string& name,
                          ValidationReport& report) {
  if (!table.has(name)) return;
  auto values = head(table.numbers(name), n);
  check_column(report, out.source, name, values, &table);
  out.set(name, std::move(values));
}

inline std::optional<ChargerState> parse_charger_state(std::string_view text) {
  if (text == "connected" || text == "1") return ChargerState::connected;
  if (text == "incoming" || text == "2") return ChargerState::incoming;
  if (text == "away" || text == "3") return ChargerState::away;
  return std::nullopt;
}

inline BuildingTimeSeries load_building_series(const std::filesystem::path& path, std::size_t n,
                                               HourConvention convention, ValidationReport& report) {
  const auto table = read_table(path, n);
  BuildingTimeSeries s;
  s.numeric.source = path.string();
  bind_columns(s.numeric, table, n, kBuildingColumns, report);
  bind_optional(s.numeric, table, n, "power_outage", report);
  bind_optional(s.numeric, table, n, "solar_generation", report);
  s.has_power_outage = table.has("power_outage");
  s.has_solar_generation = table.has("solar_generation");

  const auto modes = table.strings("hvac_mode");
  for (std::size_t row = 0; row < n; ++row) {
    const auto mode = parse_hvac_mode(modes[row]);
    if (!mode) report.add({s.numeric.source, "hvac_mode", row, modes[row], "hvac_mode must be cooling, heating or off"});
    s.hvac_mode.push_back(mode.value_or(HvacMode::off));
  }

  auto hours = s.numeric.at("hour");
  if (convention == HourConvention::automatic) convention = detect_hour_convention(hours);
  const double lo = convention == HourConvention::one_based ? 1.0 : 0.0;
  for (std::size_t row = 0; row < n; ++row) {
    if (!std::isfinite(hours[row])) continue;
    if (hours[row] < lo || hours[row] > lo + 23.0) {
      report.add({s.numeric.source, "hour", row, csv::format_number(hours[row]),
                  convention == HourConvention::one_based ? "hour must be in 1..24" : "hour must be in 0..23"});
    }
    hours[row] -= lo;
  }
  s.numeric.set("hour", std::move(hours));
  return s;
}

inline EVSchedule load_ev_schedule(const std::filesystem::path& path, std::size_t n, ValidationReport& report) {
  const auto table = read_table(path, n);
  EVSchedule s;
  s.source = path.string();
  s.numeric.source = s.source;
  const auto states = table.strings("electric_vehicle_charger_state");
  for (std::size_t row = 0; row < n; ++row) {
    const auto state = parse_charger_state(states[row]);
    if (!state) {
      report.add({s.source, "electric_vehicle_charger_state", row, states[row],
                  "charger state must be connected, incoming or away"});
    }
    s.charger_state.push_back(state.value_or(ChargerState::away));
  }
  for (const char* name : kEVColumns) s.numeric.set(name, head(table.numbers(name), n));
  // Empty cells are allowed (no EV); anything else must parse.
  for (const char* name : kEVColumns) {
    const auto c = table.index(name);
    const auto& v = s.numeric.at(name);
    for (std::size_t row = 0; row < n; ++row) {
      if (std::isnan(v[row]) && !csv::trim(table.cell(row, c)).empty()) {
        report.add({s.source, name, row, table.cell(row, c), "not a number"});
      }
    }
  }
  report.merge(validate_series(s));
  return s;
}

}  // namespace detail

inline District load_district(const std::filesystem::path& schema_path, LoadOptions options = {}) {
  District d;
  d.config = load_config(schema_path);
  d.base_dir = schema_path.parent_path();
  const std::size_t n = d.config.episode_time_steps;
  auto resolve = [&](const std::string& p) { return d.base_dir / p; };

  d.exogenous.source = "district";
  const auto weather = detail::read_table(resolve(d.config.weather), n);
  const auto pricing = detail::read_table(resolve(d.config.pricing), n);
  const auto carbon = detail::read_table(resolve(d.config.carbon_intensity), n);
  detail::bind_columns(d.exogenous, weather, n, kWeatherColumns, d.report);
  for (const char* base : kWeatherColumns) {
    for (const char* suffix : kForecastSuffixes) {
      detail::bind_optional(d.exogenous, weather, n, std::string(base) + suffix, d.report);
    }
  }
  static constexpr std::array<const char*, 1> kPricing = {"electricity_pricing"};
  static constexpr std::array<const char*, 1> kCarbon = {"carbon_intensity"};
  detail::bind_columns(d.exogenous, pricing, n, kPricing, d.report);
  for (const char* suffix : kForecastSuffixes) {
    detail::bind_optional(d.exogenous, pricing, n, std::string("electricity_pricing") + suffix, d.report);
  }
  detail::bind_columns(d.exogenous, carbon, n, kCarbon, d.report);

  for (const auto& b : d.config.buildings) {
    BuildingData data;
    data.series = detail::load_building_series(resolve(b.energy_simulation), n, d.config.hour_convention, d.report);
    if (b.pv && !data.series.has_solar_generation) {
      throw Error(ErrorKind::ColumnMissing, "solar_generation in " + resolve(b.energy_simulation).string());
    }
    if (b.lstm_model) data.lstm = load_lstm_model(resolve(*b.lstm_model));
    for (const auto& ev : b.ev_chargers) data.ev_schedules.push_back(detail::load_ev_schedule(resolve(ev.schedule), n, d.report));
    for (const auto& o : b.active_observations) {
      if (is_exogenous_observation(o) && !d.exogenous.has(o)) {
        throw Error(ErrorKind::ColumnMissing, o + " (observed by " + b.name + ")");
      }
    }
    d.buildings.push_back(std::move(data));
  }

  // Calendar observations are shared, so every building must agree on them.
  for (std::size_t i = 1; i < d.buildings.size(); ++i) {
    for (const char* name : {"month", "day_type", "hour", "daylight_savings_status"}) {
      const auto& first = d.buildings.front().series.numeric.at(name);
      const auto& other = d.buildings[i].series.numeric.at(name);
      for (std::size_t row = 0; row < n; ++row) {
        if (first[row] != other[row] && std::isfinite(first[row]) && std::isfinite(other[row])) {
          d.report.add({d.buildings[i].series.numeric.source, name, row, csv::format_number(other[row]),
                        "differs from " + d.config.buildings.front().name});
          break;
        }
      }
    }
  }

  if (!d.report.empty() && !options.lenient) {
    std::string message = std::to_string(d.report.violations.size()) + " violation(s); first: " +
                          describe(d.report.violations.front());
    throw Error(ErrorKind::DomainViolation, message);
  }
  return d;
}

/// Re-checks every bound series of a loaded district.
inline ValidationReport validate_series(const District& d) {
  ValidationReport report;
  report.merge(validate_series(d.exogenous));
  for (const auto& b : d.buildings) {
    report.merge(validate_series(b.series));
    for (const auto& ev : b.ev_schedules) report.merge(validate_series(ev));
  }
  return report;
}

}  // namespace gridflex
