#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridflex/dataset.hpp"
#include "gridflex/der.hpp"
#include "gridflex/lstm.hpp"
#include "gridflex/occupant.hpp"
#include "gridflex/random.hpp"

namespace gridflex {

inline constexpr double kIdealLoad = std::numeric_limits<double>::quiet_NaN();

/// Control inputs of one building for one step. A NaN device action means
/// the device follows the ideal load.
struct BuildingActions {
  double cooling_storage = 0.0;
  double heating_storage = 0.0;
  double dhw_storage = 0.0;
  double electrical_storage = 0.0;
  double cooling_device = kIdealLoad;
  double heating_device = kIdealLoad;
  std::vector<double> ev;  // per charger in config order, missing entries are 0
};

/// Every term of one building step. Energies are kWh for the step.
struct StepRecord {
  std::size_t time_step = 0;
  HvacMode hvac_mode = HvacMode::off;
  int power_outage = 0;

  double cooling_demand = 0.0;
  double heating_demand = 0.0;
  double dhw_demand = 0.0;
  double non_shiftable_load_demand = 0.0;

  double cooling_device_output = 0.0;
  double heating_device_output = 0.0;
  double dhw_device_output = 0.0;
  double cooling_storage_balance = 0.0;  // + charging, - discharging (thermal)
  double heating_storage_balance = 0.0;
  double dhw_storage_balance = 0.0;
  double cooling_served = 0.0;
  double heating_served = 0.0;
  double dhw_served = 0.0;

  double cooling_electricity = 0.0;
  double heating_electricity = 0.0;
  double dhw_electricity = 0.0;
  double non_shiftable_load = 0.0;
  double electrical_storage_electricity = 0.0;
  double ev_electricity = 0.0;
  double pv_electricity = 0.0;
  double net = 0.0;

  double ev_expected = 0.0;
  double ev_served = 0.0;
  double unserved_cooling = 0.0;
  double unserved_heating = 0.0;
  double unserved_dhw = 0.0;
  double unserved_non_shiftable_load = 0.0;
  double unserved_ev = 0.0;

  double indoor_temperature = 0.0;
  double setpoint = 0.0;
  double setpoint_override_delta = 0.0;

  double cooling_storage_soc = 0.0;
  double heating_storage_soc = 0.0;
  double dhw_storage_soc = 0.0;
  double electrical_storage_soc = 0.0;
  double electrical_storage_capacity = 0.0;
  double cooling_device_efficiency = 0.0;
  double heating_device_efficiency = 0.0;
  double dhw_device_efficiency = 0.0;

  std::vector<double> ev_soc;  // -1 while no EV is connected

  double terms_sum() const {
    return cooling_electricity + heating_electricity + dhw_electricity + non_shiftable_load +
           electrical_storage_electricity + ev_electricity + pv_electricity;
  }

  double unserved_energy() const {
    return unserved_cooling + unserved_heating + unserved_dhw + unserved_non_shiftable_load + unserved_ev;
  }

  bool operator==(const StepRecord&) const = default;
};

namespace detail {

enum class Service { cooling, heating, dhw };

/// Thermal device efficiency: technical efficiency times COP for heat pumps.
inline double device_efficiency(const ThermalDevice& device, Service service, double outdoor_temperature) {
  if (const auto* hp = std::get_if<der::HeatPumpSpec>(&device)) {
    const auto mode = service == Service::cooling ? der::ThermalMode::cooling : der::ThermalMode::heating;
    return hp->technical_efficiency * der::heat_pump_cop(outdoor_temperature, mode, *hp);
  }
  return std::get<der::ElectricHeaterSpec>(device).technical_efficiency;
}

/// Efficiency reported as an observation: the COP of a heat pump, the
/// technical efficiency of a heater.
inline double observed_efficiency(const ThermalDevice& device, Service service, double outdoor_temperature) {
  if (const auto* hp = std::get_if<der::HeatPumpSpec>(&device)) {
    const auto mode = service == Service::cooling ? der::ThermalMode::cooling : der::ThermalMode::heating;
    return der::heat_pump_cop(outdoor_temperature, mode, *hp);
  }
  return std::get<der::ElectricHeaterSpec>(device).technical_efficiency;
}

inline double nominal_power(const ThermalDevice& device) {
  return std::visit([](const auto& spec) { return spec.nominal_power; }, device);
}

struct ServiceFlow {
  double target = 0.0;     // load the building asks for this step
  double delivered = 0.0;  // from storage
  double charge = 0.0;     // drawn by storage from the device
  double output = 0.0;     // device thermal output
  double electricity = 0.0;
  double served = 0.0;
  double efficiency = 1.0;
  der::ThermalStorageState storage_next;
};

/// One thermal service: the device meets the target load net of storage
/// discharge, and leftover device capacity charges the storage.
inline ServiceFlow dispatch_service(const ThermalDevice* device, const StorageConfig* storage,
                                    const der::ThermalStorageState& state, Service service, bool active,
                                    double demand, double device_action, double storage_action,
                                    double outdoor_temperature, double dt_hours) {
  ServiceFlow f;
  f.storage_next = state;
  const double capacity = storage ? storage->spec.capacity : 0.0;
  double max_output = 0.0;
  if (device) {
    f.efficiency = device_efficiency(*device, service, outdoor_temperature);
    max_output = nominal_power(*device) * dt_hours * f.efficiency;
  }
  if (!active) {
    if (storage) f.storage_next = der::tes_step(0.0, state, storage->spec).next;
    return f;
  }
  if (device && !std::isnan(device_action)) {
    f.target = std::clamp(device_action, 0.0, 1.0) * max_output;
  } else {
    f.target = demand;
  }
  if (storage) {
    double a = std::clamp(storage_action, -1.0, 1.0);
    if (capacity <= 0.0) {
      a = 0.0;
    } else if (a < 0.0) {
      a = std::max(a, -f.target / capacity);
    } else if (a > 0.0) {
      a = std::min(a, std::max(0.0, max_output - f.target) / capacity);
    }
    const auto step = der::tes_step(a, state, storage->spec);
    f.storage_next = step.next;
    if (step.energy_balance < 0.0) f.delivered = -step.energy_balance;
    if (step.energy_balance > 0.0) f.charge = step.energy_balance;
  }
  if (device) {
    f.output = std::max(0.0, f.target - f.delivered) + f.charge;
    f.electricity = f.output / f.efficiency;
    f.served = f.target;
  } else {
    f.served = f.delivered;
  }
  return f;
}

}  // namespace detail

/// One building of a district. Holds references into the immutable District
/// and owns all mutable device and thermal state.
class Building {
 public:
  Building(const BuildingConfig& config, const BuildingData& data, const SeriesTable& exogenous,
           double seconds_per_step, std::size_t steps)
      : config_(&config), data_(&data), exo_(&exogenous), dt_hours_(seconds_per_step / 3600.0), steps_(steps) {
    const auto& s = data.series.numeric;
    month_ = &s.at("month");
    day_type_ = &s.at("day_type");
    hour_ = &s.at("hour");
    cooling_demand_ = &s.at("cooling_demand");
    heating_demand_ = &s.at("heating_demand");
    dhw_demand_ = &s.at("dhw_demand");
    nsl_ = &s.at("non_shiftable_load");
    indoor_ = &s.at("indoor_dry_bulb_temperature");
    setpoint_schedule_ = &s.at("indoor_dry_bulb_temperature_set_point");
    occupants_ = &s.at("occupant_count");
    outdoor_ = &exogenous.at("outdoor_dry_bulb_temperature");
    direct_ = &exogenous.at("direct_solar_irradiance");
    diffuse_ = &exogenous.at("diffuse_solar_irradiance");
    if (config.pv) {
      pv_.nominal_power = config.pv->nominal_power;
      pv_.inverter_output = s.at("solar_generation");
    }
    reset(0, std::vector<int>(steps, 0));
  }

  const BuildingConfig& config() const { return *config_; }
  const BuildingData& data() const { return *data_; }
  double hours_per_step() const { return dt_hours_; }
  std::size_t steps() const { return steps_; }
  std::size_t time_step() const { return t_; }

  void reset(std::uint64_t occupant_seed, std::vector<int> outage_signal) {
    t_ = 0;
    rng_.seed(occupant_seed);
    outage_ = std::move(outage_signal);
    outage_.resize(steps_, 0);
    auto tes = [](const std::optional<StorageConfig>& s) {
      return der::ThermalStorageState{s ? s->initial_soc * s->spec.capacity : 0.0};
    };
    cooling_tes_ = tes(config_->cooling_storage);
    heating_tes_ = tes(config_->heating_storage);
    dhw_tes_ = tes(config_->dhw_storage);
    if (config_->electrical_storage) {
      battery_ = der::BatteryState::fresh(config_->electrical_storage->spec, config_->electrical_storage->initial_soc);
    }
    evs_.clear();
    for (const auto& ev : config_->ev_chargers) evs_.push_back({ev.ev_battery, der::BatteryState::fresh(ev.ev_battery, ev.initial_soc)});
    temperatures_.assign(steps_, 0.0);
    features_.assign(steps_, ExogenousFeatures{});
    override_hold_ = 0.0;
    indoor_temperature_ = (*indoor_)[0];
    setpoint_ = (*setpoint_schedule_)[0];
    last_.reset();
  }

  const std::vector<int>& outage_signal() const { return outage_; }

  double indoor_temperature() const { return indoor_temperature_; }
  double setpoint() const { return setpoint_; }
  double setpoint_override_delta() const { return override_hold_; }
  const der::ThermalStorageState& cooling_storage() const { return cooling_tes_; }
  const der::ThermalStorageState& heating_storage() const { return heating_tes_; }
  const der::ThermalStorageState& dhw_storage() const { return dhw_tes_; }
  const der::BatteryState& battery() const { return battery_; }
  const der::ElectricVehicle& ev(std::size_t charger) const { return evs_.at(charger); }
  const std::optional<StepRecord>& last_record() const { return last_; }

  double cooling_storage_soc() const { return soc(config_->cooling_storage, cooling_tes_); }
  double heating_storage_soc() const { return soc(config_->heating_storage, heating_tes_); }
  double dhw_storage_soc() const { return soc(config_->dhw_storage, dhw_tes_); }
  double electrical_storage_soc() const {
    return config_->electrical_storage ? battery_.soc(config_->electrical_storage->spec) : 0.0;
  }

  /// SoCs of all configured storages, thermal first, then battery, then EVs.
  std::vector<double> storage_socs() const {
    std::vector<double> out;
    if (config_->cooling_storage) out.push_back(cooling_storage_soc());
    if (config_->heating_storage) out.push_back(heating_storage_soc());
    if (config_->dhw_storage) out.push_back(dhw_storage_soc());
    if (config_->electrical_storage) out.push_back(electrical_storage_soc());
    for (const auto& ev : evs_) out.push_back(ev.state.soc(ev.battery));
    return out;
  }

  bool ev_connected(std::size_t charger, std::size_t row) const {
    return data_->ev_schedules.at(charger).charger_state.at(row) == ChargerState::connected;
  }

  /// Observed device efficiency at a given row, 0 without that device.
  double device_efficiency(detail::Service service, std::size_t row) const {
    const auto& device = service == detail::Service::cooling   ? config_->cooling_device
                         : service == detail::Service::heating ? config_->heating_device
                                                               : config_->dhw_device;
    return device ? detail::observed_efficiency(*device, service, (*outdoor_)[row]) : 0.0;
  }

  /// Maps named actions onto the action struct. Names must be active.
  BuildingActions actions_from(const std::map<std::string, double>& named) const {
    BuildingActions a;
    a.ev.assign(config_->ev_chargers.size(), 0.0);
    for (const auto& [name, value] : named) {
      if (std::find(config_->active_actions.begin(), config_->active_actions.end(), name) ==
          config_->active_actions.end()) {
        throw Error(ErrorKind::UnknownAction, config_->name + ": " + name + " is not an active action");
      }
      set_action(a, name, value);
    }
    return a;
  }

  void set_action(BuildingActions& a, const std::string& name, double value) const {
    if (name == "cooling_storage") {
      a.cooling_storage = value;
    } else if (name == "heating_storage") {
      a.heating_storage = value;
    } else if (name == "dhw_storage") {
      a.dhw_storage = value;
    } else if (name == "electrical_storage") {
      a.electrical_storage = value;
    } else if (name == "cooling_device") {
      a.cooling_device = value;
    } else if (name == "heating_device") {
      a.heating_device = value;
    } else if (auto charger = ev_action_charger(*config_, name)) {
      if (a.ev.size() < config_->ev_chargers.size()) a.ev.resize(config_->ev_chargers.size(), 0.0);
      a.ev[*charger] = value;
    } else {
      throw Error(ErrorKind::UnknownAction, config_->name + ": " + name);
    }
  }

  /// Simulates the current row and advances to the next one.
  StepRecord step(const BuildingActions& actions) {
    if (t_ >= steps_) throw Error(ErrorKind::EpisodeFinished, config_->name + " stepped past the episode end");
    const std::size_t t = t_;
    update_setpoint(t);

    StepRecord r;
    r.time_step = t;
    r.hvac_mode = data_->series.hvac_mode[t];
    r.power_outage = outage_[t];
    r.cooling_demand = (*cooling_demand_)[t];
    r.heating_demand = (*heating_demand_)[t];
    r.dhw_demand = (*dhw_demand_)[t];
    r.non_shiftable_load_demand = (*nsl_)[t];

    auto plan = dispatch(actions, false);
    r.ev_expected = plan.ev_positive;
    if (r.power_outage && plan.net() > 0.0) {
      plan = dispatch(actions, true);
      curtail(plan);
    }
    commit(plan, r);

    if (r.power_outage) {
      auto shortfall = [](double expected, double served) { return std::max(0.0, expected - served); };
      r.unserved_cooling = r.hvac_mode == HvacMode::cooling ? shortfall(r.cooling_demand, r.cooling_served) : 0.0;
      r.unserved_heating = r.hvac_mode == HvacMode::heating ? shortfall(r.heating_demand, r.heating_served) : 0.0;
      r.unserved_dhw = shortfall(r.dhw_demand, r.dhw_served);
      r.unserved_non_shiftable_load = shortfall(r.non_shiftable_load_demand, r.non_shiftable_load);
      r.unserved_ev = shortfall(r.ev_expected, r.ev_served);
    }

    advance_temperature(t, r);
    r.indoor_temperature = indoor_temperature_;
    r.setpoint = setpoint_;
    r.setpoint_override_delta = override_hold_;
    r.cooling_storage_soc = cooling_storage_soc();
    r.heating_storage_soc = heating_storage_soc();
    r.dhw_storage_soc = dhw_storage_soc();
    r.electrical_storage_soc = electrical_storage_soc();
    r.electrical_storage_capacity = config_->electrical_storage ? battery_.capacity : 0.0;
    r.cooling_device_efficiency = device_efficiency(detail::Service::cooling, t);
    r.heating_device_efficiency = device_efficiency(detail::Service::heating, t);
    r.dhw_device_efficiency = device_efficiency(detail::Service::dhw, t);
    for (std::size_t i = 0; i < evs_.size(); ++i) {
      r.ev_soc.push_back(ev_connected(i, t) ? evs_[i].state.soc(evs_[i].battery) : -1.0);
    }
    ++t_;
    last_ = r;
    return r;
  }

 private:
  struct Plan {
    detail::ServiceFlow cooling, heating, dhw;
    double nsl = 0.0;
    der::BatteryStep battery;
    std::vector<der::ChargerStep> chargers;
    double ev_electricity = 0.0;
    double ev_positive = 0.0;
    double pv = 0.0;
    double thermal_scale = 1.0;

    double thermal_electricity() const { return cooling.electricity + heating.electricity + dhw.electricity; }
    double net() const { return thermal_electricity() + nsl + battery.electricity + ev_electricity + pv; }
  };

  template <class S>
  static double soc(const std::optional<StorageConfig>& config, const S& state) {
    return config ? state.soc(config->spec) : 0.0;
  }

  void update_setpoint(std::size_t t) {
    const double scheduled = (*setpoint_schedule_)[t];
    if (t > 0 && scheduled != (*setpoint_schedule_)[t - 1]) override_hold_ = 0.0;
    const auto* coeffs = coefficients_for_month(config_->occupant_model, static_cast<int>((*month_)[t]));
    if (coeffs && override_hold_ == 0.0) {
      override_hold_ = sample_setpoint_override(indoor_temperature_, *coeffs, (*occupants_)[t] > 0.0, rng_);
    }
    setpoint_ = scheduled + override_hold_;
  }

  Plan dispatch(const BuildingActions& a, bool cancel_charging) const {
    const std::size_t t = t_;
    const HvacMode mode = data_->series.hvac_mode[t];
    const double outdoor = (*outdoor_)[t];
    auto charge_only = [&](double action) { return cancel_charging && action > 0.0 ? 0.0 : action; };
    auto device = [](const std::optional<ThermalDevice>& d) { return d ? &*d : nullptr; };
    auto storage = [](const std::optional<StorageConfig>& s) { return s ? &*s : nullptr; };

    Plan p;
    p.cooling = detail::dispatch_service(device(config_->cooling_device), storage(config_->cooling_storage), cooling_tes_,
                                         detail::Service::cooling, mode == HvacMode::cooling, (*cooling_demand_)[t],
                                         a.cooling_device, charge_only(a.cooling_storage), outdoor, dt_hours_);
    p.heating = detail::dispatch_service(device(config_->heating_device), storage(config_->heating_storage), heating_tes_,
                                         detail::Service::heating, mode == HvacMode::heating, (*heating_demand_)[t],
                                         a.heating_device, charge_only(a.heating_storage), outdoor, dt_hours_);
    p.dhw = detail::dispatch_service(device(config_->dhw_device), storage(config_->dhw_storage), dhw_tes_,
                                     detail::Service::dhw, true, (*dhw_demand_)[t], kIdealLoad,
                                     charge_only(a.dhw_storage), outdoor, dt_hours_);
    p.nsl = (*nsl_)[t];
    if (config_->electrical_storage) {
      p.battery = der::bess_step(charge_only(a.electrical_storage), battery_, config_->electrical_storage->spec, dt_hours_);
    } else {
      p.battery.next = battery_;
    }
    for (std::size_t i = 0; i < evs_.size(); ++i) {
      const double action = i < a.ev.size() ? a.ev[i] : 0.0;
      const auto& charger = config_->ev_chargers[i].charger;
      const bool connected = ev_connected(i, t);
      der::ElectricVehicle ev = evs_[i];
      if (connected && arriving(i, t)) {
        const double arrival = data_->ev_schedules[i].numeric.at("electric_vehicle_estimated_arrival_soc")[t];
        if (std::isfinite(arrival)) ev.state.stored_energy = std::min(ev.state.capacity, arrival * ev.battery.capacity);
      }
      // A no_control charger ignores the action, so cancelling means idling it.
      const bool cancel = cancel_charging && (action > 0.0 || charger.mode == der::ChargerMode::no_control);
      auto step = cancel ? der::ev_charger_step(0.0, connected ? &ev : nullptr, with_mode(charger), dt_hours_)
                         : der::ev_charger_step(action, connected ? &ev : nullptr, charger, dt_hours_);
      if (!step.ev_next) step.ev_next = ev.state;
      p.ev_electricity += step.electricity;
      p.ev_positive += std::max(0.0, step.electricity);
      p.chargers.push_back(step);
    }
    if (config_->pv) p.pv = der::pv_generation(pv_, t, dt_hours_);
    return p;
  }

  static der::EVChargerSpec with_mode(der::EVChargerSpec spec) {
    if (spec.mode == der::ChargerMode::no_control) spec.mode = der::ChargerMode::g2v;
    return spec;
  }

  bool arriving(std::size_t charger, std::size_t t) const {
    return t > 0 && !ev_connected(charger, t - 1);
  }

  /// Scales thermal devices, then sheds non-shiftable load, until the
  /// building draws nothing from the grid.
  static void curtail(Plan& p) {
    if (p.net() <= 0.0) return;
    const double others = p.nsl + p.battery.electricity + p.ev_electricity + p.pv;
    const double thermal = p.thermal_electricity();
    const double scale = thermal > 0.0 ? std::clamp(-others / thermal, 0.0, 1.0) : 0.0;
    for (auto* f : {&p.cooling, &p.heating, &p.dhw}) {
      f->served = f->delivered + scale * (f->output - f->charge);
      f->output *= scale;
      f->electricity *= scale;
    }
    p.thermal_scale = scale;
    if (others > 0.0) p.nsl = std::max(0.0, p.nsl - others);
  }

  void commit(const Plan& p, StepRecord& r) {
    cooling_tes_ = p.cooling.storage_next;
    heating_tes_ = p.heating.storage_next;
    dhw_tes_ = p.dhw.storage_next;
    battery_ = p.battery.next;
    for (std::size_t i = 0; i < evs_.size(); ++i) {
      if (p.chargers[i].ev_next) evs_[i].state = *p.chargers[i].ev_next;
    }
    r.cooling_device_output = p.cooling.output;
    r.heating_device_output = p.heating.output;
    r.dhw_device_output = p.dhw.output;
    r.cooling_storage_balance = p.cooling.charge - p.cooling.delivered;
    r.heating_storage_balance = p.heating.charge - p.heating.delivered;
    r.dhw_storage_balance = p.dhw.charge - p.dhw.delivered;
    r.cooling_served = p.cooling.served;
    r.heating_served = p.heating.served;
    r.dhw_served = p.dhw.served;
    r.cooling_electricity = p.cooling.electricity;
    r.heating_electricity = p.heating.electricity;
    r.dhw_electricity = p.dhw.electricity;
    r.non_shiftable_load = p.nsl;
    r.electrical_storage_electricity = p.battery.electricity;
    r.ev_electricity = p.ev_electricity;
    r.ev_served = p.ev_positive;
    r.pv_electricity = p.pv;
    r.net = r.terms_sum();
  }

  /// Replays the dataset temperature until the LSTM window is full, then
  /// predicts in closed loop. Exogenous slot t pairs with the temperature
  /// of slot t - 1.
  void advance_temperature(std::size_t t, const StepRecord& r) {
    features_[t] = {(*outdoor_)[t], r.cooling_served + r.heating_served, (*direct_)[t], (*diffuse_)[t],
                    (*occupants_)[t], (*month_)[t], (*day_type_)[t], (*hour_)[t]};
    const auto& lstm = data_->lstm;
    if (!lstm || t < lstm->lookback) {
      temperatures_[t] = (*indoor_)[t];
    } else {
      const std::size_t l = lstm->lookback;
      LstmWindow window{std::span<const double>(temperatures_).subspan(t - l, l),
                        std::span<const ExogenousFeatures>(features_).subspan(t - l + 1, l)};
      temperatures_[t] = predict_indoor_temperature(*lstm, window);
    }
    indoor_temperature_ = temperatures_[t];
  }

  const BuildingConfig* config_;
  const BuildingData* data_;
  const SeriesTable* exo_;
  double dt_hours_;
  std::size_t steps_;

  const std::vector<double>* month_;
  const std::vector<double>* day_type_;
  const std::vector<double>* hour_;
  const std::vector<double>* cooling_demand_;
  const std::vector<double>* heating_demand_;
  const std::vector<double>* dhw_demand_;
  const std::vector<double>* nsl_;
  const std::vector<double>* indoor_;
  const std::vector<double>* setpoint_schedule_;
  const std::vector<double>* occupants_;
  const std::vector<double>* outdoor_;
  const std::vector<double>* direct_;
  const std::vector<double>* diffuse_;
  der::PVSpec pv_;

  std::size_t t_ = 0;
  Rng rng_;
  std::vector<int> outage_;
  der::ThermalStorageState cooling_tes_, heating_tes_, dhw_tes_;
  der::BatteryState battery_;
  std::vector<der::ElectricVehicle> evs_;
  std::vector<double> temperatures_;
  std::vector<ExogenousFeatures> features_;
  double override_hold_ = 0.0;
  double indoor_temperature_ = 0.0;
  double setpoint_ = 0.0;
  std::optional<StepRecord> last_;
};

}  // namespace gridflex
