#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "gridflex/kpis.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace gridflex;

namespace {

EpisodeTrace random_trace(Rng& rng, std::size_t buildings, std::size_t n) {
  EpisodeTrace tr;
  for (std::size_t b = 0; b < buildings; ++b) tr.buildings.push_back({"B" + std::to_string(b), rng.uniform(0.5, 3.0), {}});
  tr.records.assign(buildings, {});
  for (std::size_t t = 0; t < n; ++t) {
    double sum = 0.0;
    for (std::size_t b = 0; b < buildings; ++b) {
      StepRecord r;
      r.time_step = t;
      r.net = rng.uniform(-4.0, 8.0);
      r.setpoint = rng.uniform(20.0, 24.0);
      r.indoor_temperature = r.setpoint + rng.uniform(-5.0, 5.0);
      r.power_outage = rng.bernoulli(0.2) ? 1 : 0;
      r.unserved_cooling = r.power_outage ? rng.uniform(0.0, 2.0) : 0.0;
      r.unserved_non_shiftable_load = r.power_outage ? rng.uniform(0.0, 1.0) : 0.0;
      sum += r.net;
      tr.records[b].push_back(r);
    }
    tr.district_net.push_back(sum);
    tr.electricity_pricing.push_back(rng.uniform(0.05, 0.4));
    tr.carbon_intensity.push_back(rng.uniform(0.1, 0.9));
    tr.rewards.push_back({-sum});
  }
  return tr;
}

struct Columns {
  std::vector<double> tin, tspt, net;
  std::vector<int> outage;
};

Columns columns(const std::vector<StepRecord>& records) {
  Columns c;
  for (const auto& r : records) {
    c.tin.push_back(r.indoor_temperature);
    c.tspt.push_back(r.setpoint);
    c.net.push_back(r.net);
    c.outage.push_back(r.power_outage);
  }
  return c;
}

void expect_matches_oracle(const EpisodeTrace& tr) {
  const auto report = compute_kpis(tr);
  const std::size_t h = 24;
  for (std::size_t b = 0; b < tr.buildings.size(); ++b) {
    const auto c = columns(tr.records[b]);
    const double band = tr.buildings[b].comfort_band;
    const auto& k = report.buildings[b];
    const auto cold = oracle::cold_deltas(c.tin, c.tspt);
    const auto hot = oracle::hot_deltas(c.tin, c.tspt);
    EXPECT_NEAR(kpi_value(k, "discomfort_proportion"), oracle::discomfort(c.tin, c.tspt, band, 0), 1e-12);
    EXPECT_NEAR(kpi_value(k, "discomfort_cold_proportion"), oracle::discomfort(c.tin, c.tspt, band, -1), 1e-12);
    EXPECT_NEAR(kpi_value(k, "discomfort_hot_proportion"), oracle::discomfort(c.tin, c.tspt, band, 1), 1e-12);
    EXPECT_NEAR(kpi_value(k, "discomfort_cold_delta_minimum"), oracle::minimum(cold), 1e-12);
    EXPECT_NEAR(kpi_value(k, "discomfort_cold_delta_maximum"), oracle::maximum(cold), 1e-12);
    EXPECT_NEAR(kpi_value(k, "discomfort_cold_delta_average"), oracle::mean(cold), 1e-12);
    EXPECT_NEAR(kpi_value(k, "discomfort_hot_delta_minimum"), oracle::minimum(hot), 1e-12);
    EXPECT_NEAR(kpi_value(k, "discomfort_hot_delta_maximum"), oracle::maximum(hot), 1e-12);
    EXPECT_NEAR(kpi_value(k, "discomfort_hot_delta_average"), oracle::mean(hot), 1e-12);
    EXPECT_NEAR(kpi_value(k, "electricity_consumption_total"), oracle::consumption(c.net), 1e-9);
    EXPECT_NEAR(kpi_value(k, "zero_net_energy"), oracle::net_total(c.net), 1e-9);
    EXPECT_NEAR(kpi_value(k, "cost_total"), oracle::weighted(c.net, tr.electricity_pricing), 1e-9);
    EXPECT_NEAR(kpi_value(k, "carbon_emissions_total"), oracle::weighted(c.net, tr.carbon_intensity), 1e-9);
    EXPECT_NEAR(kpi_value(k, "daily_peak_average"), oracle::average_daily_peak(c.net, h), 1e-9);
    EXPECT_NEAR(kpi_value(k, "all_time_peak"), oracle::maximum(c.net), 1e-12);
    EXPECT_NEAR(kpi_value(k, "ramping_total"), oracle::ramping(c.net), 1e-9);
    EXPECT_NEAR(kpi_value(k, "one_minus_load_factor_average"), oracle::one_minus_load_factor(c.net, h), 1e-9);
    EXPECT_NEAR(kpi_value(k, "one_minus_thermal_resilience"),
                oracle::one_minus_thermal_resilience(c.tin, c.tspt, band, c.outage), 1e-12);
  }
  EXPECT_NEAR(kpi_value(report.district, "all_time_peak"), oracle::maximum(tr.district_net), 1e-12);
  EXPECT_NEAR(kpi_value(report.district, "ramping_total"), oracle::ramping(tr.district_net), 1e-9);
  EXPECT_NEAR(kpi_value(report.district, "daily_peak_average"), oracle::average_daily_peak(tr.district_net, h), 1e-9);
  EXPECT_NEAR(kpi_value(report.district, "one_minus_load_factor_average"),
              oracle::one_minus_load_factor(tr.district_net, h), 1e-9);
}

EpisodeTrace constant_trace(double kw, std::size_t n) {
  EpisodeTrace tr;
  tr.buildings.push_back({"B0", 2.0, {}});
  tr.records.assign(1, {});
  for (std::size_t t = 0; t < n; ++t) {
    StepRecord r;
    r.net = kw;
    r.indoor_temperature = 22.0;
    r.setpoint = 22.0;
    tr.records[0].push_back(r);
    tr.district_net.push_back(kw);
    tr.electricity_pricing.push_back(0.2);
    tr.carbon_intensity.push_back(0.5);
  }
  return tr;
}

}  // namespace

TEST(Kpi, ConstantLoadFixedPoints) {
  const auto report = compute_kpis(constant_trace(3.0, 48));
  EXPECT_EQ(report.days, 2u);
  EXPECT_FALSE(report.partial_day_dropped);
  EXPECT_EQ(kpi_value(report.district, "ramping_total"), 0.0);
  EXPECT_EQ(kpi_value(report.district, "all_time_peak"), 3.0);
  EXPECT_EQ(kpi_value(report.district, "daily_peak_average"), 3.0);
  EXPECT_EQ(kpi_value(report.district, "one_minus_load_factor_average"), 0.0);
  EXPECT_NEAR(kpi_value(report.buildings[0], "cost_total"), 3.0 * 48 * 0.2, 1e-9);
  EXPECT_NEAR(kpi_value(report.buildings[0], "carbon_emissions_total"), 3.0 * 48 * 0.5, 1e-9);
}

TEST(Kpi, PerfectComfortGivesZeros) {
  const auto report = compute_kpis(constant_trace(1.0, 24));
  for (const char* k : {"discomfort_proportion", "discomfort_cold_proportion", "discomfort_hot_proportion",
                        "discomfort_cold_delta_minimum", "discomfort_cold_delta_maximum", "discomfort_cold_delta_average",
                        "discomfort_hot_delta_minimum", "discomfort_hot_delta_maximum", "discomfort_hot_delta_average",
                        "one_minus_thermal_resilience", "unserved_energy_total"}) {
    EXPECT_EQ(kpi_value(report.buildings[0], k), 0.0) << k;
  }
}

TEST(Kpi, ComfortBandEdgeIsComfortable) {
  const std::vector<double> tin{24.0, 20.0, 24.0 + 1e-9}, tspt{22.0, 22.0, 22.0};
  const auto c = kpi::comfort(tin, tspt, 2.0);
  EXPECT_NEAR(c.discomfort, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(c.cold, 0.0);
  EXPECT_EQ(c.cold_delta_maximum, 2.0);
}

TEST(Kpi, PartialDayDropped) {
  auto tr = constant_trace(2.0, 30);
  tr.district_net[27] = 10.0;
  tr.records[0][27].net = 10.0;
  const auto report = compute_kpis(tr);
  EXPECT_EQ(report.days, 1u);
  EXPECT_TRUE(report.partial_day_dropped);
  EXPECT_EQ(kpi_value(report.district, "daily_peak_average"), 2.0);
  EXPECT_EQ(kpi_value(report.district, "all_time_peak"), 10.0);
}

TEST(Kpi, ShortTraceHasNoDailyKpis) {
  const auto report = compute_kpis(constant_trace(2.0, 10));
  EXPECT_TRUE(std::isnan(kpi_value(report.district, "daily_peak_average")));
  EXPECT_TRUE(std::isnan(kpi_value(report.district, "one_minus_load_factor_average")));
}

TEST(Kpi, LoadFactorOfAlternatingDay) {
  std::vector<double> day(24);
  for (std::size_t t = 0; t < 24; ++t) day[t] = t % 2 ? 4.0 : 0.0;
  EXPECT_DOUBLE_EQ(kpi::average_one_minus_load_factor(day, 24), 0.5);
  EXPECT_EQ(kpi::average_one_minus_load_factor(std::vector<double>(24, 0.0), 24), 0.0);
}

TEST(Kpi, MatchesOracleOnRandomTraces) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto tr = random_trace(rng, static_cast<std::size_t>(rng.uniform_int(1, 4)), 72);
    expect_matches_oracle(tr);
  }
}

TEST(Kpi, DistrictAveragesBuildingKpis) {
  Rng rng(8);
  const auto tr = random_trace(rng, 3, 48);
  const auto report = compute_kpis(tr);
  for (const char* k : {"discomfort_proportion", "cost_total", "unserved_energy_total", "zero_net_energy"}) {
    double mean = 0.0;
    for (const auto& t : report.buildings) mean += kpi_value(t, k) / 3.0;
    EXPECT_NEAR(kpi_value(report.district, k), mean, 1e-12) << k;
  }
}

TEST(Kpi, RmseAndMape) {
  const std::vector<double> a{2.0, 4.0}, p{1.0, 5.0};
  EXPECT_DOUBLE_EQ(kpi::rmse(a, p), 1.0);
  EXPECT_DOUBLE_EQ(kpi::mape(a, p), 0.375);
  EXPECT_DOUBLE_EQ(kpi::rmse(std::vector<double>{3.0}, std::vector<double>{0.0}), 3.0);
  EXPECT_DOUBLE_EQ(kpi::mape(std::vector<double>{3.0}, std::vector<double>{0.0}), 1.0);
  EXPECT_ERROR_KIND(kpi::rmse(a, std::vector<double>{1.0}), ErrorKind::LengthMismatch);
  EXPECT_ERROR_KIND(kpi::rmse(std::vector<double>{}, std::vector<double>{}), ErrorKind::EmptyTrace);
  EXPECT_ERROR_KIND(kpi::mape(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 1.0}), ErrorKind::ZeroActual);
}

TEST(Kpi, UnservedEnergyOnlyDuringOutage) {
  StepRecord outage, normal;
  outage.power_outage = 1;
  outage.unserved_cooling = 2.0 - 0.5;
  normal.unserved_cooling = 7.0;
  const std::vector<StepRecord> records{outage, normal};
  const auto u = kpi::unserved_energy(records);
  EXPECT_DOUBLE_EQ(u.cooling, 1.5);
  EXPECT_DOUBLE_EQ(u.total(), 1.5);
}

TEST(Kpi, ConsumptionScalesLinearly) {
  Rng rng(12);
  auto tr = random_trace(rng, 2, 48);
  const auto base = compute_kpis(tr);
  const double k = 2.5;
  for (auto& records : tr.records) {
    for (auto& r : records) r.net *= k;
  }
  for (auto& e : tr.district_net) e *= k;
  const auto scaled = compute_kpis(tr);
  for (const char* name : {"electricity_consumption_total", "zero_net_energy", "cost_total", "carbon_emissions_total",
                           "all_time_peak", "daily_peak_average", "ramping_total"}) {
    EXPECT_NEAR(kpi_value(scaled.district, name), k * kpi_value(base.district, name), 1e-9) << name;
  }
  EXPECT_NEAR(kpi_value(scaled.district, "one_minus_load_factor_average"),
              kpi_value(base.district, "one_minus_load_factor_average"), 1e-12);
}

TEST(Kpi, BuildingOrderDoesNotChangeDistrict) {
  Rng rng(13);
  auto tr = random_trace(rng, 3, 48);
  const auto base = compute_kpis(tr);
  std::swap(tr.records[0], tr.records[2]);
  std::swap(tr.buildings[0], tr.buildings[2]);
  const auto permuted = compute_kpis(tr);
  for (std::size_t k = 0; k < base.district.size(); ++k) {
    EXPECT_EQ(base.district[k].first, permuted.district[k].first);
    EXPECT_NEAR(base.district[k].second, permuted.district[k].second, 1e-12) << base.district[k].first;
  }
}

TEST(Kpi, ResilienceIsDiscomfortOnOutageSubset) {
  Rng rng(14);
  const auto tr = random_trace(rng, 1, 96);
  const auto c = columns(tr.records[0]);
  Columns sub;
  for (std::size_t t = 0; t < c.tin.size(); ++t) {
    if (!c.outage[t]) continue;
    sub.tin.push_back(c.tin[t]);
    sub.tspt.push_back(c.tspt[t]);
  }
  ASSERT_FALSE(sub.tin.empty());
  const double band = tr.buildings[0].comfort_band;
  EXPECT_NEAR(kpi::one_minus_thermal_resilience(c.tin, c.tspt, band, c.outage),
              kpi::comfort(sub.tin, sub.tspt, band).discomfort, 1e-15);
}

TEST(Kpi, RatioAgainstBaseline) {
  const auto run = compute_kpis(constant_trace(3.0, 24));
  const auto base = compute_kpis(constant_trace(2.0, 24));
  const auto ratio = kpi_ratio(run, base);
  EXPECT_DOUBLE_EQ(kpi_value(ratio.district, "all_time_peak"), 1.5);
  EXPECT_TRUE(std::isnan(kpi_value(ratio.district, "ramping_total")));
}

TEST(Kpi, JsonAndCsvOutput) {
  const auto report = compute_kpis(constant_trace(3.0, 24));
  const auto j = to_json(report);
  EXPECT_EQ(j["days"], 1);
  EXPECT_EQ(j["district"]["all_time_peak"], 3.0);
  EXPECT_EQ(j["buildings"]["B0"]["cost_total"], kpi_value(report.buildings[0], "cost_total"));
  const auto short_report = compute_kpis(constant_trace(3.0, 10));
  EXPECT_TRUE(to_json(short_report)["district"]["daily_peak_average"].is_null());

  std::ostringstream out;
  write_kpi_csv(out, report);
  std::istringstream in(out.str());
  const auto table = csv::parse(in, "kpis");
  EXPECT_EQ(table.header(), (std::vector<std::string>{"level", "name", "kpi", "value"}));
  EXPECT_EQ(table.row_count(), report.district.size() + report.buildings[0].size());
}

TEST(Kpi, EmptyTraceRejected) {
  EXPECT_ERROR_KIND(compute_kpis(EpisodeTrace{}), ErrorKind::EmptyTrace);
  EXPECT_ERROR_KIND(kpi_value(KpiTable{}, "x"), ErrorKind::IndexOutOfRange);
}

TEST(Kpi, TraceFromEnvMatchesOracle) {
  auto district = gridflex::testing::share(load_district(gridflex::testing::fixture_schema()));
  Env env(district);
  Rng rng(3);
  env.reset();
  while (!env.terminated()) env.step(gridflex::testing::random_actions(env, rng));
  expect_matches_oracle(env.trace());
}
