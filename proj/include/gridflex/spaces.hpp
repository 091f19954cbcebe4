#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace gridflex {

enum class HvacMode { off, cooling, heating };

constexpr std::string_view to_string(HvacMode mode) noexcept {
  switch (mode) {
    case HvacMode::cooling: return "cooling";
    case HvacMode::heating: return "heating";
    case HvacMode::off: break;
  }
  return "off";
}

/// Accepts the names or the integer codes 0 (off), 1 (cooling), 2 (heating).
inline std::optional<HvacMode> parse_hvac_mode(std::string_view text) {
  if (text == "off" || text == "0") return HvacMode::off;
  if (text == "cooling" || text == "1") return HvacMode::cooling;
  if (text == "heating" || text == "2") return HvacMode::heating;
  return std::nullopt;
}

struct ObservationInfo {
  std::string_view name;
  bool shared;             // identical in every building
  bool control_dependent;  // changes with actions
  bool per_charger;        // one per EV charger, suffixed with the charger id
};

// clang-format off
inline constexpr std::array kObservationCatalog = {
    ObservationInfo{"month", true, false, false},
    ObservationInfo{"day_type", true, false, false},
    ObservationInfo{"hour", true, false, false},
    ObservationInfo{"daylight_savings_status", true, false, false},
    ObservationInfo{"outdoor_dry_bulb_temperature", true, false, false},
    ObservationInfo{"outdoor_dry_bulb_temperature_predicted_6h", true, false, false},
    ObservationInfo{"outdoor_dry_bulb_temperature_predicted_12h", true, false, false},
    ObservationInfo{"outdoor_dry_bulb_temperature_predicted_24h", true, false, false},
    ObservationInfo{"outdoor_relative_humidity", true, false, false},
    ObservationInfo{"outdoor_relative_humidity_predicted_6h", true, false, false},
    ObservationInfo{"outdoor_relative_humidity_predicted_12h", true, false, false},
    ObservationInfo{"outdoor_relative_humidity_predicted_24h", true, false, false},
    ObservationInfo{"diffuse_solar_irradiance", true, false, false},
    ObservationInfo{"diffuse_solar_irradiance_predicted_6h", true, false, false},
    ObservationInfo{"diffuse_solar_irradiance_predicted_12h", true, false, false},
    ObservationInfo{"diffuse_solar_irradiance_predicted_24h", true, false, false},
    ObservationInfo{"direct_solar_irradiance", true, false, false},
    ObservationInfo{"direct_solar_irradiance_predicted_6h", true, false, false},
    ObservationInfo{"direct_solar_irradiance_predicted_12h", true, false, false},
    ObservationInfo{"direct_solar_irradiance_predicted_24h", true, false, false},
    ObservationInfo{"carbon_intensity", true, false, false},
    ObservationInfo{"electricity_pricing", false, false, false},
    ObservationInfo{"electricity_pricing_predicted_6h", false, false, false},
    ObservationInfo{"electricity_pricing_predicted_12h", false, false, false},
    ObservationInfo{"electricity_pricing_predicted_24h", false, false, false},
    ObservationInfo{"cooling_demand", false, true, false},
    ObservationInfo{"heating_demand", false, true, false},
    ObservationInfo{"dhw_demand", false, false, false},
    ObservationInfo{"cooling_electricity_consumption", false, true, false},
    ObservationInfo{"heating_electricity_consumption", false, true, false},
    ObservationInfo{"dhw_electricity_consumption", false, true, false},
    ObservationInfo{"electrical_storage_electricity_consumption", false, true, false},
    ObservationInfo{"non_shiftable_load", false, false, false},
    ObservationInfo{"net_electricity_consumption", false, true, false},
    ObservationInfo{"hvac_mode", false, false, false},
    ObservationInfo{"cooling_storage_soc", false, true, false},
    ObservationInfo{"heating_storage_soc", false, true, false},
    ObservationInfo{"dhw_storage_soc", false, true, false},
    ObservationInfo{"electrical_storage_soc", false, true, false},
    ObservationInfo{"electrical_vehicle_soc", false, true, true},
    ObservationInfo{"electrical_vehicle_estimated_arrival_soc", false, false, true},
    ObservationInfo{"electrical_vehicle_required_departure_soc", false, false, true},
    ObservationInfo{"electrical_vehicle_estimated_arrival_time", false, false, true},
    ObservationInfo{"electrical_vehicle_estimated_departure_time", false, false, true},
    ObservationInfo{"electrical_vehicle_charger_state", false, false, true},
    ObservationInfo{"solar_generation", false, false, false},
    ObservationInfo{"cooling_device_efficiency", false, false, false},
    ObservationInfo{"heating_device_efficiency", false, false, false},
    ObservationInfo{"dhw_device_efficiency", false, false, false},
    ObservationInfo{"indoor_dry_bulb_temperature", false, true, false},
    ObservationInfo{"indoor_dry_bulb_temperature_set_point", false, true, false},
    ObservationInfo{"indoor_dry_bulb_temperature_delta", false, true, false},
    ObservationInfo{"indoor_dry_bulb_temperature_set_point_override_delta", false, true, false},
    ObservationInfo{"indoor_relative_humidity", false, false, false},
    ObservationInfo{"occupant_count", false, false, false},
    ObservationInfo{"power_outage", false, false, false},
};
// clang-format on

/// A per-charger observation is written either bare (first charger) or as
/// "<name>_<charger_id>". Returns the catalog entry and the charger suffix.
struct ObservationName {
  const ObservationInfo* info = nullptr;
  std::string charger_id;
};

inline std::optional<ObservationName> parse_observation_name(std::string_view name) {
  for (const auto& info : kObservationCatalog) {
    if (name == info.name) return ObservationName{&info, {}};
  }
  for (const auto& info : kObservationCatalog) {
    if (!info.per_charger) continue;
    if (name.size() > info.name.size() + 1 && name.substr(0, info.name.size()) == info.name &&
        name[info.name.size()] == '_') {
      return ObservationName{&info, std::string(name.substr(info.name.size() + 1))};
    }
  }
  return std::nullopt;
}

enum class ActionKind { storage, device };

struct ActionInfo {
  std::string_view name;
  ActionKind kind;
};

inline constexpr std::array kActionCatalog = {
    ActionInfo{"cooling_storage", ActionKind::storage},  ActionInfo{"heating_storage", ActionKind::storage},
    ActionInfo{"dhw_storage", ActionKind::storage},      ActionInfo{"electrical_storage", ActionKind::storage},
    ActionInfo{"electric_vehicle_storage", ActionKind::storage},
    ActionInfo{"cooling_device", ActionKind::device},    ActionInfo{"heating_device", ActionKind::device},
};

/// Bounds and kind of one entry of an agent's action vector.
struct ActionSlot {
  std::string name;
  ActionKind kind = ActionKind::storage;
  double low = -1.0;
  double high = 1.0;
};

}  // namespace gridflex
