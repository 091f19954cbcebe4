#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gridflex/curve.hpp"
#include "gridflex/error.hpp"

// Device physics. Every function here is pure: specs are immutable, states
// are passed in and returned by value. Powers are kW, energies kWh, and every
// power is turned into energy by multiplying with the step length in hours.
namespace gridflex::der {

enum class ThermalMode { cooling, heating };

inline constexpr double kKelvinOffset = 273.15;

struct HeatPumpSpec {
  double nominal_power = 0.0;
  double supply_temperature_cooling = 8.0;
  double supply_temperature_heating = 45.0;
  double technical_efficiency = 0.2;
  double cop_max = 20.0;
};

struct ElectricHeaterSpec {
  double nominal_power = 0.0;
  double technical_efficiency = 0.9;
};

/// Fraction of nominal power in [0, 1] (control mode).
struct PowerFraction {
  double value = 0.0;
};

/// Thermal energy that must be delivered this step (ideal-load mode).
struct IdealLoad {
  double energy = 0.0;
};

using DeviceCommand = std::variant<PowerFraction, IdealLoad>;

struct DeviceFlow {
  double electricity = 0.0;
  double thermal_output = 0.0;
};

inline void validate(const HeatPumpSpec& spec) {
  if (!(spec.nominal_power > 0.0)) throw Error(ErrorKind::ConfigInvalid, "heat pump nominal_power must be > 0");
  if (!(spec.technical_efficiency > 0.0 && spec.technical_efficiency <= 1.0)) {
    throw Error(ErrorKind::ConfigInvalid, "heat pump technical_efficiency must be in (0, 1]");
  }
  if (!(spec.cop_max > 1.0)) throw Error(ErrorKind::ConfigInvalid, "heat pump cop_max must be > 1");
}

inline void validate(const ElectricHeaterSpec& spec) {
  if (!(spec.nominal_power > 0.0)) throw Error(ErrorKind::ConfigInvalid, "electric heater nominal_power must be > 0");
  if (!(spec.technical_efficiency > 0.0 && spec.technical_efficiency <= 1.0)) {
    throw Error(ErrorKind::ConfigInvalid, "electric heater technical_efficiency must be in (0, 1]");
  }
}

/// Ideal refrigeration-cycle COP. The numerator is the supply temperature in
/// kelvin, the denominator a Celsius difference. A non-positive lift or a
/// result above cop_max yields cop_max.
inline double heat_pump_cop(double outdoor_temperature, ThermalMode mode, const HeatPumpSpec& spec) {
  const double supply =
      mode == ThermalMode::cooling ? spec.supply_temperature_cooling : spec.supply_temperature_heating;
  const double lift =
      mode == ThermalMode::cooling ? outdoor_temperature - supply : supply - outdoor_temperature;
  if (lift <= 0.0) return spec.cop_max;
  return std::min((supply + kKelvinOffset) / lift, spec.cop_max);
}

namespace detail {

inline DeviceFlow device_step(const DeviceCommand& command, double nominal_power, double efficiency,
                              double dt_hours) {
  if (const auto* fraction = std::get_if<PowerFraction>(&command)) {
    const double a = std::clamp(fraction->value, 0.0, 1.0);
    const double electricity = a * nominal_power * dt_hours;
    return {electricity, efficiency * electricity};
  }
  const double load = std::get<IdealLoad>(command).energy;
  if (load < 0.0) throw Error(ErrorKind::NegativeIdealLoad, "ideal load " + std::to_string(load));
  return {load / efficiency, load};
}

}  // namespace detail

inline DeviceFlow heat_pump_step(const DeviceCommand& command, double outdoor_temperature, ThermalMode mode,
                                 const HeatPumpSpec& spec, double dt_hours) {
  const double efficiency = spec.technical_efficiency * heat_pump_cop(outdoor_temperature, mode, spec);
  return detail::device_step(command, spec.nominal_power, efficiency, dt_hours);
}

inline DeviceFlow electric_heater_step(const DeviceCommand& command, const ElectricHeaterSpec& spec,
                                       double dt_hours) {
  return detail::device_step(command, spec.nominal_power, spec.technical_efficiency, dt_hours);
}

// ---------------------------------------------------------------------------
// Thermal energy storage

struct ThermalStorageSpec {
  double capacity = 0.0;
  double loss_coefficient = 0.0;
  double technical_efficiency = 1.0;

  double round_trip_efficiency() const { return std::sqrt(technical_efficiency); }
};

struct ThermalStorageState {
  double stored_energy = 0.0;

  double soc(const ThermalStorageSpec& spec) const {
    return spec.capacity > 0.0 ? stored_energy / spec.capacity : 0.0;
  }
};

inline void validate(const ThermalStorageSpec& spec) {
  if (!(spec.capacity >= 0.0)) throw Error(ErrorKind::ConfigInvalid, "storage capacity must be >= 0");
  if (!(spec.loss_coefficient >= 0.0 && spec.loss_coefficient < 1.0)) {
    throw Error(ErrorKind::ConfigInvalid, "storage loss_coefficient must be in [0, 1)");
  }
  if (!(spec.technical_efficiency > 0.0 && spec.technical_efficiency <= 1.0)) {
    throw Error(ErrorKind::ConfigInvalid, "storage technical_efficiency must be in (0, 1]");
  }
}

struct ThermalStorageStep {
  ThermalStorageState next;
  // Positive: energy drawn from the charging device before losses.
  // Negative: energy handed to the building after losses.
  double energy_balance = 0.0;
};

/// Standing losses apply on every step, including a = 0 ("no flow").
inline ThermalStorageStep tes_step(double action, const ThermalStorageState& state, const ThermalStorageSpec& spec) {
  const double a = std::clamp(action, -1.0, 1.0);
  const double kept = state.stored_energy * (1.0 - spec.loss_coefficient);
  if (spec.capacity <= 0.0) return {{0.0}, 0.0};
  const double eta = spec.round_trip_efficiency();
  if (a > 0.0) {
    const double stored = std::min(spec.capacity, kept + a * spec.capacity * eta);
    return {{stored}, (stored - kept) / eta};
  }
  if (a < 0.0) {
    const double stored = std::max(0.0, kept + a * spec.capacity / eta);
    return {{stored}, (stored - kept) * eta};
  }
  return {{kept}, 0.0};
}

// ---------------------------------------------------------------------------
// Battery

struct BatterySpec {
  double capacity = 0.0;  // before degradation
  double nominal_power = 0.0;
  double depth_of_discharge = 1.0;
  double loss_coefficient = 0.0;
  double capacity_loss_coefficient = 0.0;
  PiecewiseLinearCurve power_efficiency_curve = PiecewiseLinearCurve::constant(1.0);
  PiecewiseLinearCurve capacity_power_curve = PiecewiseLinearCurve::constant(1.0);
};

/// Below this degraded capacity the battery is dead and every action is a no-op.
inline constexpr double kDeadCapacity = 1e-9;

struct BatteryState {
  double stored_energy = 0.0;
  double capacity = 0.0;  // degraded

  static BatteryState fresh(const BatterySpec& spec, double soc = 0.0) {
    return {std::clamp(soc, 0.0, 1.0) * spec.capacity, spec.capacity};
  }

  double soc(const BatterySpec& spec) const { return spec.capacity > 0.0 ? stored_energy / spec.capacity : 0.0; }
  bool dead() const { return capacity < kDeadCapacity; }
};

inline void validate_curve_range(const PiecewiseLinearCurve& curve, const char* name) {
  for (const auto& [x, y] : curve.points()) {
    if (x < 0.0 || x > 1.0 || !(y > 0.0) || y > 1.0) {
      throw Error(ErrorKind::ConfigInvalid, std::string(name) + " must map [0,1] into (0,1]");
    }
  }
}

inline void validate(const BatterySpec& spec) {
  if (!(spec.capacity >= 0.0)) throw Error(ErrorKind::ConfigInvalid, "battery capacity must be >= 0");
  if (!(spec.nominal_power >= 0.0)) throw Error(ErrorKind::ConfigInvalid, "battery nominal_power must be >= 0");
  if (!(spec.depth_of_discharge >= 0.0 && spec.depth_of_discharge <= 1.0)) {
    throw Error(ErrorKind::ConfigInvalid, "battery depth_of_discharge must be in [0, 1]");
  }
  if (!(spec.loss_coefficient >= 0.0 && spec.loss_coefficient < 1.0)) {
    throw Error(ErrorKind::ConfigInvalid, "battery loss_coefficient must be in [0, 1)");
  }
  if (!(spec.capacity_loss_coefficient >= 0.0)) {
    throw Error(ErrorKind::ConfigInvalid, "battery capacity_loss_coefficient must be >= 0");
  }
  validate_curve_range(spec.power_efficiency_curve, "power_efficiency_curve");
  validate_curve_range(spec.capacity_power_curve, "capacity_power_curve");
}

/// Maximum charge/discharge power (kW) at the previous step's SoC.
inline double bess_available_power(double soc, const BatterySpec& spec) {
  return spec.nominal_power * spec.capacity_power_curve(std::clamp(soc, 0.0, 1.0));
}

/// Technical efficiency from the power-efficiency curve, evaluated at the
/// requested power as a fraction of nominal power.
inline double bess_technical_efficiency(double action, const BatterySpec& spec, double dt_hours) {
  const double normalized = std::abs(action) * spec.capacity / dt_hours / spec.nominal_power;
  return spec.power_efficiency_curve(std::clamp(normalized, 0.0, 1.0));
}

inline double degraded_capacity(double previous_capacity, const BatterySpec& spec, double energy_balance) {
  if (previous_capacity < kDeadCapacity) return 0.0;
  const double loss =
      spec.capacity_loss_coefficient * spec.capacity * std::abs(energy_balance) / (2.0 * previous_capacity);
  return std::max(0.0, previous_capacity - loss);
}

struct BatteryStep {
  BatteryState next;
  double electricity = 0.0;  // equals the energy balance
  double round_trip_efficiency = 1.0;
};

inline BatteryStep bess_step(double action, const BatteryState& state, const BatterySpec& spec, double dt_hours) {
  const double a = std::clamp(action, -1.0, 1.0);
  if (state.dead() || spec.capacity <= 0.0) return {{state.stored_energy, state.dead() ? 0.0 : state.capacity}, 0.0, 1.0};

  const double kept = state.stored_energy * (1.0 - spec.loss_coefficient);
  if (a == 0.0 || spec.nominal_power <= 0.0) return {{kept, state.capacity}, 0.0, 1.0};

  const double eta = std::sqrt(bess_technical_efficiency(a, spec, dt_hours));
  const double energy_limit = bess_available_power(state.soc(spec), spec) * dt_hours;
  double stored = kept;
  double balance = 0.0;
  if (a > 0.0) {
    stored = std::min(state.capacity, kept + std::min(a * spec.capacity, energy_limit) * eta);
    balance = (stored - kept) / eta;
  } else {
    const double floor = std::min(spec.capacity * (1.0 - spec.depth_of_discharge), kept);
    stored = std::max(floor, kept + std::max(a * spec.capacity, -energy_limit) / eta);
    balance = (stored - kept) * eta;
  }
  const double capacity = degraded_capacity(state.capacity, spec, balance);
  return {{std::min(stored, capacity), capacity}, balance, eta};
}

// ---------------------------------------------------------------------------
// Electric vehicle charger

enum class ChargerMode { v2g, g2v, no_control };

struct EVChargerSpec {
  std::string charger_id;  // EVC_<building>_<number>_<plug>
  double nominal_power_charging = 0.0;
  double nominal_power_discharging = 0.0;
  double technical_efficiency = 1.0;
  ChargerMode mode = ChargerMode::g2v;
};

inline void validate(const EVChargerSpec& spec) {
  if (!(spec.nominal_power_charging > 0.0 && spec.nominal_power_discharging > 0.0)) {
    throw Error(ErrorKind::ConfigInvalid, spec.charger_id + ": charger nominal powers must be > 0");
  }
  if (!(spec.technical_efficiency > 0.0 && spec.technical_efficiency <= 1.0)) {
    throw Error(ErrorKind::ConfigInvalid, spec.charger_id + ": charger technical_efficiency must be in (0, 1]");
  }
}

struct ElectricVehicle {
  BatterySpec battery;
  BatteryState state;
};

inline double action_lower_bound(ChargerMode mode) { return mode == ChargerMode::v2g ? -1.0 : 0.0; }

struct ChargerStep {
  double electricity = 0.0;   // drawn by the charger (negative when feeding the building)
  double energy_to_ev = 0.0;  // equals the EV battery energy balance
  std::optional<BatteryState> ev_next;
};

/// A no_control charger always runs at full charging power while an EV is
/// connected; the action is still range-checked.
inline ChargerStep ev_charger_step(double action, const ElectricVehicle* ev, const EVChargerSpec& charger,
                                   double dt_hours) {
  if (!(action >= action_lower_bound(charger.mode) && action <= 1.0)) {
    throw Error(ErrorKind::ActionOutOfRangeForMode,
                charger.charger_id + " action " + std::to_string(action));
  }
  if (ev == nullptr) return {};
  const double a = charger.mode == ChargerMode::no_control ? 1.0 : action;
  if (a == 0.0 || ev->battery.capacity <= 0.0) {
    auto idle = bess_step(0.0, ev->state, ev->battery, dt_hours);
    return {0.0, 0.0, idle.next};
  }
  const double power = a > 0.0 ? charger.nominal_power_charging : charger.nominal_power_discharging;
  const double requested = a * power * dt_hours;
  const double to_ev = charger.technical_efficiency * requested;
  const auto battery = bess_step(to_ev / ev->battery.capacity, ev->state, ev->battery, dt_hours);
  // The battery may accept less than requested; the charger follows it.
  return {battery.electricity / charger.technical_efficiency, battery.electricity, battery.next};
}

// ---------------------------------------------------------------------------
// Photovoltaics

struct PVSpec {
  double nominal_power = 0.0;
  std::vector<double> inverter_output;  // kW per installed kW, one value per step
};

/// Generation is reported with negative sign (it offsets consumption).
inline double pv_generation(const PVSpec& spec, std::size_t t, double dt_hours) {
  if (t >= spec.inverter_output.size()) {
    throw Error(ErrorKind::IndexOutOfRange, "pv step " + std::to_string(t) + " of " +
                                                std::to_string(spec.inverter_output.size()));
  }
  if (spec.nominal_power == 0.0 || spec.inverter_output[t] == 0.0) return 0.0;
  return -spec.nominal_power * spec.inverter_output[t] * dt_hours;
}

}  // namespace gridflex::der
