#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridflex/csv.hpp"
#include "gridflex/error.hpp"
#include "gridflex/outage.hpp"
#include "gridflex/trace.hpp"

namespace gridflex {

namespace kpi {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Comfort {
  double discomfort = 0.0;
  double cold = 0.0;
  double hot = 0.0;
  double cold_delta_minimum = 0.0;
  double cold_delta_maximum = 0.0;
  double cold_delta_average = 0.0;
  double hot_delta_minimum = 0.0;
  double hot_delta_maximum = 0.0;
  double hot_delta_average = 0.0;
};

inline Comfort comfort(std::span<const double> t_in, std::span<const double> t_spt, double band) {
  Comfort c;
  const std::size_t n = t_in.size();
  if (n == 0) return c;
  c.cold_delta_minimum = INFINITY;
  c.hot_delta_minimum = INFINITY;
  for (std::size_t t = 0; t < n; ++t) {
    const double delta = t_in[t] - t_spt[t];
    const double cold = std::abs(std::min(0.0, delta));
    const double hot = std::max(0.0, delta);
    c.discomfort += std::abs(delta) > band;
    c.cold += delta < -band;
    c.hot += delta > band;
    c.cold_delta_minimum = std::min(c.cold_delta_minimum, cold);
    c.cold_delta_maximum = std::max(c.cold_delta_maximum, cold);
    c.cold_delta_average += cold;
    c.hot_delta_minimum = std::min(c.hot_delta_minimum, hot);
    c.hot_delta_maximum = std::max(c.hot_delta_maximum, hot);
    c.hot_delta_average += hot;
  }
  const double inv = 1.0 / static_cast<double>(n);
  c.discomfort *= inv;
  c.cold *= inv;
  c.hot *= inv;
  c.cold_delta_average *= inv;
  c.hot_delta_average *= inv;
  return c;
}

inline double total_consumption(std::span<const double> net) {
  double s = 0.0;
  for (double e : net) s += std::max(e, 0.0);
  return s;
}

inline double total_net(std::span<const double> net) {
  double s = 0.0;
  for (double e : net) s += e;
  return s;
}

/// Sum of positive consumption weighted by a per-step rate (price or carbon).
inline double weighted_consumption(std::span<const double> net, std::span<const double> rate) {
  double s = 0.0;
  for (std::size_t t = 0; t < net.size(); ++t) s += std::max(net[t], 0.0) * rate[t];
  return s;
}

inline double all_time_peak(std::span<const double> net) {
  if (net.empty()) return kNaN;
  return *std::max_element(net.begin(), net.end());
}

inline double total_ramping(std::span<const double> net) {
  double s = 0.0;
  for (std::size_t t = 1; t < net.size(); ++t) s += std::max(0.0, net[t] - net[t - 1]);
  return s;
}

/// Averages over full days only; NaN when not one full day is present.
inline double average_daily_peak(std::span<const double> net, std::size_t steps_per_day) {
  const std::size_t days = net.size() / steps_per_day;
  if (days == 0) return kNaN;
  double s = 0.0;
  for (std::size_t d = 0; d < days; ++d) s += all_time_peak(net.subspan(d * steps_per_day, steps_per_day));
  return s / static_cast<double>(days);
}

/// A day whose peak is 0 counts as perfectly flat.
inline double average_one_minus_load_factor(std::span<const double> net, std::size_t steps_per_day) {
  const std::size_t days = net.size() / steps_per_day;
  if (days == 0) return kNaN;
  double s = 0.0;
  for (std::size_t d = 0; d < days; ++d) {
    const auto day = net.subspan(d * steps_per_day, steps_per_day);
    const double peak = all_time_peak(day);
    if (peak == 0.0) continue;
    s += 1.0 - (total_net(day) / static_cast<double>(steps_per_day)) / peak;
  }
  return s / static_cast<double>(days);
}

/// Discomfort share of outage steps; 0 when there was no outage.
inline double one_minus_thermal_resilience(std::span<const double> t_in, std::span<const double> t_spt, double band,
                                           std::span<const int> outage) {
  std::size_t outage_steps = 0;
  double uncomfortable = 0.0;
  for (std::size_t t = 0; t < t_in.size(); ++t) {
    if (outage[t] <= 0) continue;
    ++outage_steps;
    uncomfortable += std::abs(t_in[t] - t_spt[t]) > band;
  }
  return outage_steps == 0 ? 0.0 : uncomfortable / static_cast<double>(outage_steps);
}

struct Unserved {
  double cooling = 0.0;
  double heating = 0.0;
  double dhw = 0.0;
  double non_shiftable_load = 0.0;
  double electric_vehicle = 0.0;

  double total() const { return cooling + heating + dhw + non_shiftable_load + electric_vehicle; }
};

/// Expected minus served energy summed over outage steps only.
inline Unserved unserved_energy(std::span<const StepRecord> records) {
  Unserved u;
  for (const auto& r : records) {
    if (r.power_outage <= 0) continue;
    u.cooling += r.unserved_cooling;
    u.heating += r.unserved_heating;
    u.dhw += r.unserved_dhw;
    u.non_shiftable_load += r.unserved_non_shiftable_load;
    u.electric_vehicle += r.unserved_ev;
  }
  return u;
}

inline void check_pair(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) {
    throw Error(ErrorKind::LengthMismatch, "actual has " + std::to_string(actual.size()) + " values, predicted has " +
                                               std::to_string(predicted.size()));
  }
  if (actual.empty()) throw Error(ErrorKind::EmptyTrace, "no values to compare");
}

inline double rmse(std::span<const double> actual, std::span<const double> predicted) {
  check_pair(actual, predicted);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  return std::sqrt(s / static_cast<double>(actual.size()));
}

inline double mape(std::span<const double> actual, std::span<const double> predicted) {
  check_pair(actual, predicted);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) throw Error(ErrorKind::ZeroActual, "actual value at index " + std::to_string(i) + " is 0");
    s += std::abs((actual[i] - predicted[i]) / actual[i]);
  }
  return s / static_cast<double>(actual.size());
}

}  // namespace kpi

using KpiTable = std::vector<std::pair<std::string, double>>;

inline double kpi_value(const KpiTable& table, const std::string& name) {
  for (const auto& [k, v] : table) {
    if (k == name) return v;
  }
  throw Error(ErrorKind::IndexOutOfRange, "no KPI named " + name);
}

struct KPIReport {
  std::size_t steps = 0;
  std::size_t steps_per_day = 24;
  std::size_t days = 0;
  bool partial_day_dropped = false;
  std::vector<std::string> building_names;
  std::vector<KpiTable> buildings;
  KpiTable district;
};

namespace detail {

inline void add_grid_kpis(KpiTable& t, std::span<const double> net, std::size_t steps_per_day) {
  t.emplace_back("daily_peak_average", kpi::average_daily_peak(net, steps_per_day));
  t.emplace_back("all_time_peak", kpi::all_time_peak(net));
  t.emplace_back("ramping_total", kpi::total_ramping(net));
  t.emplace_back("one_minus_load_factor_average", kpi::average_one_minus_load_factor(net, steps_per_day));
}

inline bool is_grid_kpi(const std::string& name) {
  return name == "daily_peak_average" || name == "all_time_peak" || name == "ramping_total" ||
         name == "one_minus_load_factor_average";
}

}  // namespace detail

inline KpiTable building_kpis(std::span<const StepRecord> records, std::span<const double> pricing,
                              std::span<const double> carbon, double band, std::size_t steps_per_day) {
  std::vector<double> t_in, t_spt, net;
  std::vector<int> outage;
  for (const auto& r : records) {
    t_in.push_back(r.indoor_temperature);
    t_spt.push_back(r.setpoint);
    net.push_back(r.net);
    outage.push_back(r.power_outage);
  }
  const auto c = kpi::comfort(t_in, t_spt, band);
  const auto u = kpi::unserved_energy(records);
  KpiTable t{
      {"discomfort_proportion", c.discomfort},
      {"discomfort_cold_proportion", c.cold},
      {"discomfort_hot_proportion", c.hot},
      {"discomfort_cold_delta_minimum", c.cold_delta_minimum},
      {"discomfort_cold_delta_maximum", c.cold_delta_maximum},
      {"discomfort_cold_delta_average", c.cold_delta_average},
      {"discomfort_hot_delta_minimum", c.hot_delta_minimum},
      {"discomfort_hot_delta_maximum", c.hot_delta_maximum},
      {"discomfort_hot_delta_average", c.hot_delta_average},
      {"electricity_consumption_total", kpi::total_consumption(net)},
      {"zero_net_energy", kpi::total_net(net)},
      {"cost_total", kpi::weighted_consumption(net, pricing)},
      {"carbon_emissions_total", kpi::weighted_consumption(net, carbon)},
      {"one_minus_thermal_resilience", kpi::one_minus_thermal_resilience(t_in, t_spt, band, outage)},
      {"unserved_energy_total", u.total()},
      {"unserved_energy_cooling", u.cooling},
      {"unserved_energy_heating", u.heating},
      {"unserved_energy_dhw", u.dhw},
      {"unserved_energy_non_shiftable_load", u.non_shiftable_load},
      {"unserved_energy_electric_vehicle", u.electric_vehicle},
  };
  detail::add_grid_kpis(t, net, steps_per_day);
  return t;
}

/// Building tables for every building, and a district table holding the
/// grid KPIs of the district net plus the building average of every other KPI.
inline KPIReport compute_kpis(const EpisodeTrace& trace) {
  if (trace.length() == 0 || trace.buildings.empty()) throw Error(ErrorKind::EmptyTrace, "trace has no steps");
  KPIReport report;
  report.steps = trace.length();
  report.steps_per_day = steps_per_day(trace.seconds_per_time_step);
  report.days = report.steps / report.steps_per_day;
  report.partial_day_dropped = report.steps % report.steps_per_day != 0;
  for (std::size_t b = 0; b < trace.buildings.size(); ++b) {
    report.building_names.push_back(trace.buildings[b].name);
    report.buildings.push_back(building_kpis(trace.records[b], trace.electricity_pricing, trace.carbon_intensity,
                                             trace.buildings[b].comfort_band, report.steps_per_day));
  }
  detail::add_grid_kpis(report.district, trace.district_net, report.steps_per_day);
  const auto& first = report.buildings.front();
  for (std::size_t k = 0; k < first.size(); ++k) {
    if (detail::is_grid_kpi(first[k].first)) continue;
    double sum = 0.0;
    for (const auto& table : report.buildings) sum += table[k].second;
    report.district.emplace_back(first[k].first, sum / static_cast<double>(report.buildings.size()));
  }
  return report;
}

/// Ratio of every KPI to the same KPI of a baseline run; NaN where the
/// baseline value is 0.
inline KPIReport kpi_ratio(const KPIReport& run, const KPIReport& baseline) {
  if (run.building_names != baseline.building_names) {
    throw Error(ErrorKind::ConfigInvalid, "baseline trace covers different buildings");
  }
  KPIReport out = run;
  auto divide = [](KpiTable& t, const KpiTable& base) {
    for (auto& [name, value] : t) {
      const double b = kpi_value(base, name);
      value = b == 0.0 ? kpi::kNaN : value / b;
    }
  };
  divide(out.district, baseline.district);
  for (std::size_t b = 0; b < out.buildings.size(); ++b) divide(out.buildings[b], baseline.buildings[b]);
  return out;
}

inline nlohmann::ordered_json to_json(const KPIReport& report) {
  auto table = [](const KpiTable& t) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [name, value] : t) {
      if (std::isfinite(value)) {
        j[name] = value;
      } else {
        j[name] = nullptr;
      }
    }
    return j;
  };
  nlohmann::ordered_json j;
  j["steps"] = report.steps;
  j["steps_per_day"] = report.steps_per_day;
  j["days"] = report.days;
  j["partial_day_dropped"] = report.partial_day_dropped;
  j["district"] = table(report.district);
  j["buildings"] = nlohmann::ordered_json::object();
  for (std::size_t b = 0; b < report.buildings.size(); ++b) j["buildings"][report.building_names[b]] = table(report.buildings[b]);
  return j;
}

inline void write_kpi_csv(std::ostream& out, const KPIReport& report) {
  csv::Writer w(out);
  w.header({"level", "name", "kpi", "value"});
  for (const auto& [name, value] : report.district) w.row({"district", "district", name, csv::format_number(value)});
  for (std::size_t b = 0; b < report.buildings.size(); ++b) {
    for (const auto& [name, value] : report.buildings[b]) {
      w.row({"building", report.building_names[b], name, csv::format_number(value)});
    }
  }
}

}  // namespace gridflex
