#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridflex/building.hpp"
#include "gridflex/csv.hpp"
#include "gridflex/error.hpp"

namespace gridflex {

/// Everything recorded over one episode, enough to recompute every KPI.
struct EpisodeTrace {
  struct BuildingInfo {
    std::string name;
    double comfort_band = 2.0;
    std::vector<std::string> ev_chargers;
  };

  double seconds_per_time_step = 3600.0;
  std::uint64_t seed = 0;
  std::vector<BuildingInfo> buildings;
  std::vector<std::vector<StepRecord>> records;  // [building][step]
  std::vector<double> district_net;
  std::vector<double> electricity_pricing;
  std::vector<double> carbon_intensity;
  std::vector<std::vector<double>> rewards;  // [step][agent]

  std::size_t length() const { return district_net.size(); }
};

using RecordField = std::pair<const char*, double StepRecord::*>;

// clang-format off
inline constexpr std::array<RecordField, 39> kRecordFields = {{
    {"cooling_demand", &StepRecord::cooling_demand},
    {"heating_demand", &StepRecord::heating_demand},
    {"dhw_demand", &StepRecord::dhw_demand},
    {"non_shiftable_load_demand", &StepRecord::non_shiftable_load_demand},
    {"cooling_device_output", &StepRecord::cooling_device_output},
    {"heating_device_output", &StepRecord::heating_device_output},
    {"dhw_device_output", &StepRecord::dhw_device_output},
    {"cooling_storage_balance", &StepRecord::cooling_storage_balance},
    {"heating_storage_balance", &StepRecord::heating_storage_balance},
    {"dhw_storage_balance", &StepRecord::dhw_storage_balance},
    {"cooling_served", &StepRecord::cooling_served},
    {"heating_served", &StepRecord::heating_served},
    {"dhw_served", &StepRecord::dhw_served},
    {"cooling_electricity_consumption", &StepRecord::cooling_electricity},
    {"heating_electricity_consumption", &StepRecord::heating_electricity},
    {"dhw_electricity_consumption", &StepRecord::dhw_electricity},
    {"non_shiftable_load", &StepRecord::non_shiftable_load},
    {"electrical_storage_electricity_consumption", &StepRecord::electrical_storage_electricity},
    {"electric_vehicle_electricity_consumption", &StepRecord::ev_electricity},
    {"pv_electricity_consumption", &StepRecord::pv_electricity},
    {"net_electricity_consumption", &StepRecord::net},
    {"ev_expected", &StepRecord::ev_expected},
    {"ev_served", &StepRecord::ev_served},
    {"unserved_cooling", &StepRecord::unserved_cooling},
    {"unserved_heating", &StepRecord::unserved_heating},
    {"unserved_dhw", &StepRecord::unserved_dhw},
    {"unserved_non_shiftable_load", &StepRecord::unserved_non_shiftable_load},
    {"unserved_ev", &StepRecord::unserved_ev},
    {"indoor_dry_bulb_temperature", &StepRecord::indoor_temperature},
    {"indoor_dry_bulb_temperature_set_point", &StepRecord::setpoint},
    {"indoor_dry_bulb_temperature_set_point_override_delta", &StepRecord::setpoint_override_delta},
    {"cooling_storage_soc", &StepRecord::cooling_storage_soc},
    {"heating_storage_soc", &StepRecord::heating_storage_soc},
    {"dhw_storage_soc", &StepRecord::dhw_storage_soc},
    {"electrical_storage_soc", &StepRecord::electrical_storage_soc},
    {"electrical_storage_capacity", &StepRecord::electrical_storage_capacity},
    {"cooling_device_efficiency", &StepRecord::cooling_device_efficiency},
    {"heating_device_efficiency", &StepRecord::heating_device_efficiency},
    {"dhw_device_efficiency", &StepRecord::dhw_device_efficiency},
}};
// clang-format on

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write " + path.string());
  return out;
}

inline std::string ev_column(const std::string& charger) { return "electrical_vehicle_soc_" + charger; }

}  // namespace detail

inline void write_building_csv(std::ostream& out, const std::vector<StepRecord>& records,
                               const std::vector<std::string>& chargers) {
  csv::Writer w(out);
  std::vector<std::string> header{"time_step", "hvac_mode", "power_outage"};
  for (const auto& [name, member] : kRecordFields) header.emplace_back(name);
  for (const auto& c : chargers) header.push_back(detail::ev_column(c));
  w.header(header);
  for (const auto& r : records) {
    std::vector<std::string> row{std::to_string(r.time_step), std::string(to_string(r.hvac_mode)),
                                 std::to_string(r.power_outage)};
    for (const auto& [name, member] : kRecordFields) row.push_back(csv::format_number(r.*member));
    for (double soc : r.ev_soc) row.push_back(csv::format_number(soc));
    w.row(row);
  }
}

/// Writes one CSV per building, district.csv and run_summary.json.
inline void write_trace(const std::filesystem::path& dir, const EpisodeTrace& trace) {
  std::filesystem::create_directories(dir);
  for (std::size_t b = 0; b < trace.buildings.size(); ++b) {
    auto out = detail::open_output(dir / (trace.buildings[b].name + ".csv"));
    write_building_csv(out, trace.records[b], trace.buildings[b].ev_chargers);
  }
  {
    auto out = detail::open_output(dir / "district.csv");
    csv::Writer w(out);
    std::vector<std::string> header{"time_step", "net_electricity_consumption", "electricity_pricing", "carbon_intensity"};
    const std::size_t agents = trace.rewards.empty() ? 0 : trace.rewards.front().size();
    for (std::size_t a = 0; a < agents; ++a) header.push_back("reward_" + std::to_string(a));
    w.header(header);
    for (std::size_t t = 0; t < trace.length(); ++t) {
      std::vector<std::string> row{std::to_string(t), csv::format_number(trace.district_net[t]),
                                   csv::format_number(trace.electricity_pricing[t]),
                                   csv::format_number(trace.carbon_intensity[t])};
      for (double r : trace.rewards[t]) row.push_back(csv::format_number(r));
      w.row(row);
    }
  }
  nlohmann::ordered_json summary;
  summary["seconds_per_time_step"] = trace.seconds_per_time_step;
  summary["episode_time_steps"] = trace.length();
  summary["seed"] = trace.seed;
  summary["buildings"] = nlohmann::ordered_json::array();
  for (const auto& b : trace.buildings) {
    summary["buildings"].push_back({{"name", b.name}, {"comfort_band", b.comfort_band}, {"ev_chargers", b.ev_chargers}});
  }
  auto out = detail::open_output(dir / "run_summary.json");
  out << summary.dump(2) << '\n';
}

inline EpisodeTrace read_trace(const std::filesystem::path& dir) {
  EpisodeTrace trace;
  const auto summary_path = dir / "run_summary.json";
  std::ifstream in(summary_path);
  if (!in) throw Error(ErrorKind::MissingFile, summary_path.string());
  nlohmann::json summary;
  try {
    in >> summary;
    trace.seconds_per_time_step = summary.at("seconds_per_time_step").get<double>();
    trace.seed = summary.value("seed", std::uint64_t{0});
    for (const auto& b : summary.at("buildings")) {
      trace.buildings.push_back({b.at("name").get<std::string>(), b.at("comfort_band").get<double>(),
                                 b.value("ev_chargers", std::vector<std::string>{})});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, summary_path.string() + ": " + e.what());
  }

  const auto district = csv::read(dir / "district.csv");
  trace.district_net = district.numbers("net_electricity_consumption");
  trace.electricity_pricing = district.numbers("electricity_pricing");
  trace.carbon_intensity = district.numbers("carbon_intensity");
  std::vector<std::vector<double>> reward_columns;
  for (std::size_t a = 0; district.has("reward_" + std::to_string(a)); ++a) {
    reward_columns.push_back(district.numbers("reward_" + std::to_string(a)));
  }
  trace.rewards.assign(district.row_count(), {});
  for (std::size_t t = 0; t < district.row_count(); ++t) {
    for (const auto& c : reward_columns) trace.rewards[t].push_back(c[t]);
  }

  for (const auto& b : trace.buildings) {
    const auto table = csv::read(dir / (b.name + ".csv"));
    if (table.row_count() != trace.length()) {
      throw Error(ErrorKind::LengthMismatch, b.name + ".csv has " + std::to_string(table.row_count()) +
                                                 " rows, district.csv has " + std::to_string(trace.length()));
    }
    std::vector<StepRecord> records(table.row_count());
    const auto modes = table.strings("hvac_mode");
    const auto outage = table.numbers("power_outage");
    const auto steps = table.numbers("time_step");
    for (std::size_t t = 0; t < records.size(); ++t) {
      records[t].time_step = static_cast<std::size_t>(steps[t]);
      records[t].hvac_mode = parse_hvac_mode(modes[t]).value_or(HvacMode::off);
      records[t].power_outage = static_cast<int>(outage[t]);
    }
    for (const auto& [name, member] : kRecordFields) {
      const auto values = table.numbers(name);
      for (std::size_t t = 0; t < records.size(); ++t) records[t].*member = values[t];
    }
    for (const auto& c : b.ev_chargers) {
      const auto values = table.numbers(detail::ev_column(c));
      for (std::size_t t = 0; t < records.size(); ++t) records[t].ev_soc.push_back(values[t]);
    }
    trace.records.push_back(std::move(records));
  }
  return trace;
}

}  // namespace gridflex
