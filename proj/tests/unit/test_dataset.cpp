#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "test_support.hpp"

using namespace gridflex;
using namespace gridflex::testing;

namespace {

std::string weather_csv(std::size_t n, bool with_direct = true) {
  std::ostringstream s;
  s << "outdoor_dry_bulb_temperature,outdoor_relative_humidity,diffuse_solar_irradiance";
  if (with_direct) s << ",direct_solar_irradiance";
  s << "\n";
  for (std::size_t t = 0; t < n; ++t) {
    s << 20 + t % 5 << ",60,100";
    if (with_direct) s << ",200";
    s << "\n";
  }
  return s.str();
}

std::string single_column(const char* name, std::size_t n, double v) {
  std::ostringstream s;
  s << name << "\n";
  for (std::size_t t = 0; t < n; ++t) s << v << "\n";
  return s.str();
}

std::string building_csv(std::size_t n, int first_hour = 1) {
  std::ostringstream s;
  s << "month,day_type,hour,daylight_savings_status,cooling_demand,heating_demand,dhw_demand,non_shiftable_load,"
       "indoor_dry_bulb_temperature,indoor_dry_bulb_temperature_set_point,indoor_relative_humidity,occupant_count,"
       "hvac_mode\n";
  for (std::size_t t = 0; t < n; ++t) {
    s << "1,2," << (first_hour + static_cast<int>(t % 24)) << ",0,1.5,0,0.2,0.8,22,23,45,2,cooling\n";
  }
  return s.str();
}

nlohmann::json minimal_schema(std::size_t n, std::size_t buildings = 1) {
  nlohmann::json j{{"episode_time_steps", n},
                   {"weather", "weather.csv"},
                   {"pricing", "pricing.csv"},
                   {"carbon_intensity", "carbon.csv"},
                   {"buildings", nlohmann::json::array()}};
  for (std::size_t b = 0; b < buildings; ++b) {
    j["buildings"].push_back({{"name", "B" + std::to_string(b)}, {"energy_simulation", "B" + std::to_string(b) + ".csv"}});
  }
  return j;
}

void write_minimal(const TempDir& dir, std::size_t n, std::size_t buildings = 1) {
  write_file(dir / "weather.csv", weather_csv(n));
  write_file(dir / "pricing.csv", single_column("electricity_pricing", n, 0.1));
  write_file(dir / "carbon.csv", single_column("carbon_intensity", n, 0.5));
  for (std::size_t b = 0; b < buildings; ++b) write_file(dir / ("B" + std::to_string(b) + ".csv"), building_csv(n));
  write_file(dir / "schema.json", minimal_schema(n, buildings).dump(2));
}

// Replaces one cell (data row, named column) of a CSV file.
void set_cell(const std::filesystem::path& path, std::size_t row, const std::string& column, const std::string& value) {
  std::istringstream in(read_file(path));
  std::string line, out;
  std::getline(in, line);
  const auto header = csv::split_line(line);
  const auto col = static_cast<std::size_t>(std::find(header.begin(), header.end(), column) - header.begin());
  out += line + "\n";
  for (std::size_t r = 0; std::getline(in, line); ++r) {
    if (r == row) {
      auto cells = csv::split_line(line);
      cells[col] = value;
      line.clear();
      for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + cells[i];
    }
    out += line + "\n";
  }
  write_file(path, out);
}

}  // namespace

TEST(Dataset, MinimalSchemaLoads) {
  TempDir dir;
  write_minimal(dir, 24);
  const auto d = load_district(dir / "schema.json");
  EXPECT_EQ(d.config.buildings.size(), 1u);
  EXPECT_EQ(d.steps(), 24u);
  EXPECT_TRUE(d.report.empty());
  const auto& hour = d.buildings[0].series.numeric.at("hour");
  EXPECT_EQ(hour.front(), 0.0);
  EXPECT_EQ(hour.back(), 23.0);
  EXPECT_EQ(d.config.seconds_per_time_step, 3600.0);
  EXPECT_EQ(d.config.reward.name, "electricity_consumption");
}

TEST(Dataset, ZeroBasedHoursKept) {
  TempDir dir;
  write_minimal(dir, 24);
  write_file(dir / "B0.csv", building_csv(24, 0));
  const auto d = load_district(dir / "schema.json");
  EXPECT_EQ(d.buildings[0].series.numeric.at("hour")[5], 5.0);
}

TEST(Dataset, LongerSeriesTruncated) {
  TempDir dir;
  write_minimal(dir, 24);
  write_file(dir / "B0.csv", building_csv(48));
  EXPECT_EQ(load_district(dir / "schema.json").buildings[0].series.numeric.length(), 24u);
}

TEST(Dataset, MissingWeatherColumn) {
  TempDir dir;
  write_minimal(dir, 24);
  write_file(dir / "weather.csv", weather_csv(24, false));
  EXPECT_ERROR_KIND(load_district(dir / "schema.json"), ErrorKind::ColumnMissing);
}

TEST(Dataset, ShortBuildingSeries) {
  TempDir dir;
  write_minimal(dir, 24, 2);
  write_file(dir / "B1.csv", building_csv(23));
  EXPECT_ERROR_KIND(load_district(dir / "schema.json"), ErrorKind::LengthMismatch);
}

TEST(Dataset, MissingFile) {
  TempDir dir;
  write_minimal(dir, 24);
  std::filesystem::remove(dir / "pricing.csv");
  EXPECT_ERROR_KIND(load_district(dir / "schema.json"), ErrorKind::MissingFile);
  EXPECT_ERROR_KIND(load_district(dir / "nothing.json"), ErrorKind::MissingFile);
}

TEST(Dataset, NegativeDemandReportedByRowAndColumn) {
  TempDir dir;
  write_minimal(dir, 24);
  set_cell(dir / "B0.csv", 7, "cooling_demand", "-1.0");
  EXPECT_ERROR_KIND(load_district(dir / "schema.json"), ErrorKind::DomainViolation);
  const auto d = load_district(dir / "schema.json", {true});
  ASSERT_EQ(d.report.violations.size(), 1u);
  const auto& v = d.report.violations[0];
  EXPECT_EQ(v.row, 7u);
  EXPECT_EQ(v.column, "cooling_demand");
  EXPECT_EQ(v.value, "-1.0");
  EXPECT_NE(describe(v).find("row 7"), std::string::npos);
}

TEST(Dataset, HumidityOutOfRange) {
  TempDir dir;
  write_minimal(dir, 24);
  set_cell(dir / "B0.csv", 3, "indoor_relative_humidity", "150");
  const auto d = load_district(dir / "schema.json", {true});
  ASSERT_EQ(d.report.violations.size(), 1u);
  EXPECT_EQ(d.report.violations[0].column, "indoor_relative_humidity");
  EXPECT_EQ(d.report.violations[0].row, 3u);
}

TEST(Dataset, ValidYearHasEmptyReport) {
  TempDir dir;
  write_minimal(dir, 8760);
  const auto d = load_district(dir / "schema.json");
  EXPECT_TRUE(d.report.empty());
  EXPECT_TRUE(validate_series(d).empty());
}

TEST(Dataset, BadHvacModeAndCalendarMismatch) {
  TempDir dir;
  write_minimal(dir, 24, 2);
  set_cell(dir / "B0.csv", 2, "hvac_mode", "warm");
  set_cell(dir / "B1.csv", 4, "month", "2");
  const auto d = load_district(dir / "schema.json", {true});
  ASSERT_EQ(d.report.violations.size(), 2u);
  EXPECT_EQ(d.report.violations[0].column, "hvac_mode");
  EXPECT_EQ(d.report.violations[1].column, "month");
}

TEST(Dataset, UnknownKeysRejected) {
  auto j = minimal_schema(24);
  j["weathr"] = "x.csv";
  EXPECT_ERROR_KIND(parse_config(j), ErrorKind::ConfigInvalid);
  j = minimal_schema(24);
  j["buildings"][0]["pv"] = {{"nominal_power", 4.0}, {"tilt", 30}};
  EXPECT_ERROR_KIND(parse_config(j), ErrorKind::ConfigInvalid);
}

TEST(Dataset, UnknownActionAndObservation) {
  auto j = minimal_schema(24);
  j["buildings"][0]["active_actions"] = {"electrical_storage"};
  EXPECT_ERROR_KIND(parse_config(j), ErrorKind::UnknownAction);
  j = minimal_schema(24);
  j["buildings"][0]["active_observations"] = {"moon_phase"};
  EXPECT_ERROR_KIND(parse_config(j), ErrorKind::UnknownObservation);
  j = minimal_schema(24);
  j["buildings"] = nlohmann::json::array();
  EXPECT_ERROR_KIND(parse_config(j), ErrorKind::EmptyDistrict);
}

TEST(Dataset, ConfigJsonRoundTrip) {
  const auto c = load_config(fixture_schema());
  const auto back = parse_config(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.buildings.size(), c.buildings.size());
  EXPECT_EQ(back.buildings[0].ev_chargers[0].charger.charger_id, c.buildings[0].ev_chargers[0].charger.charger_id);
  EXPECT_EQ(back.buildings[0].occupant_model, c.buildings[0].occupant_model);
}

TEST(Dataset, FixtureLoadsCleanly) {
  const auto d = load_district(fixture_schema());
  EXPECT_TRUE(d.report.empty());
  EXPECT_EQ(d.buildings.size(), 2u);
  EXPECT_TRUE(d.buildings[0].lstm);
  EXPECT_EQ(d.buildings[0].ev_schedules.size(), 1u);
  EXPECT_TRUE(d.buildings[1].series.has_power_outage);
  EXPECT_TRUE(d.exogenous.has("outdoor_dry_bulb_temperature_predicted_6h"));
}

// Random single-cell corruption of the fixture: loading either succeeds with
// violations reported, or fails with a typed error. Never anything else.
TEST(Dataset, CorruptionFuzz) {
  const std::vector<std::string> files{"Building_1.csv", "Building_2.csv", "weather.csv", "pricing.csv",
                                       "ev_EVC_Building_1_1_1.csv"};
  const std::vector<std::string> junk{"", "abc", "-5", "1e400", "nan", "24.5", "150", "3", "away"};
  Rng rng(2024);
  TempDir dir;
  for (int trial = 0; trial < 60; ++trial) {
    copy_fixture(dir.path());
    const auto& file = files[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(files.size()) - 1))];
    const auto table = csv::read(dir / file);
    const auto col = table.header()[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(table.header().size()) - 1))];
    const auto row = static_cast<std::size_t>(rng.uniform_int(0, 23));
    const auto& value = junk[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(junk.size()) - 1))];
    set_cell(dir / file, row, col, value);
    try {
      const auto d = load_district(dir / "schema.json", {true});
      EXPECT_EQ(d.steps(), 24u);
      try {
        load_district(dir / "schema.json");
        EXPECT_TRUE(d.report.empty());
      } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DomainViolation);
        EXPECT_FALSE(d.report.empty());
      }
    } catch (const Error& e) {
      SUCCEED() << e.what();
    }
  }
}
