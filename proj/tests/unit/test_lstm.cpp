#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "gridflex/csv.hpp"
#include "gridflex/lstm.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace gridflex;
using gridflex::testing::fixture_dir;

namespace {

oracle::Lstm oracle_from_model(const LstmModel& model) {
  oracle::Lstm m;
  m.hidden = model.hidden_size();
  for (Eigen::Index r = 0; r < model.weight_ih.rows(); ++r) {
    m.w_ih.emplace_back();
    m.w_hh.emplace_back();
    for (Eigen::Index c = 0; c < model.weight_ih.cols(); ++c) m.w_ih.back().push_back(model.weight_ih(r, c));
    for (Eigen::Index c = 0; c < model.weight_hh.cols(); ++c) m.w_hh.back().push_back(model.weight_hh(r, c));
    m.b_ih.push_back(model.bias_ih[r]);
    m.b_hh.push_back(model.bias_hh[r]);
  }
  for (Eigen::Index u = 0; u < model.dense_weight.size(); ++u) m.dense.push_back(model.dense_weight[u]);
  m.dense_bias = model.dense_bias;
  m.lo.assign(model.feature_min.begin(), model.feature_min.end());
  m.hi.assign(model.feature_max.begin(), model.feature_max.end());
  m.target_lo = model.target_min;
  m.target_hi = model.target_max;
  return m;
}

struct Window {
  std::vector<std::vector<double>> rows;  // raw 9-feature rows
  std::vector<double> temps;
  std::vector<ExogenousFeatures> exo;

  void add(const std::vector<double>& row) {
    rows.push_back(row);
    temps.push_back(row[0]);
    ExogenousFeatures e{};
    for (std::size_t j = 0; j < kLstmExogenous; ++j) e[j] = row[j + 1];
    exo.push_back(e);
  }
  LstmWindow view() const { return {temps, exo}; }
};

Window fixture_window() {
  const auto table = csv::read(fixture_dir() / "golden" / "lstm_window.csv");
  Window w;
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    std::vector<double> row;
    for (const char* f : kLstmFeatures) row.push_back(table.numbers(f)[r]);
    w.add(row);
  }
  return w;
}

Window random_window(Rng& rng, std::size_t l) {
  Window w;
  for (std::size_t k = 0; k < l; ++k) {
    w.add({rng.uniform(15, 30), rng.uniform(-5, 38), rng.uniform(0, 15), rng.uniform(0, 900), rng.uniform(0, 300),
           rng.uniform(0, 5), static_cast<double>(rng.uniform_int(1, 12)), static_cast<double>(rng.uniform_int(1, 8)),
           static_cast<double>(rng.uniform_int(0, 23))});
  }
  return w;
}

}  // namespace

TEST(Lstm, ZeroWeightsGiveDenormalizedDenseBias) {
  auto m = LstmModel::zeros(4, 3);
  m.dense_bias = 0.3;
  m.target_min = 10.0;
  m.target_max = 30.0;
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto w = random_window(rng, 3);
    EXPECT_DOUBLE_EQ(predict_indoor_temperature(m, w.view()), 16.0);
  }
}

TEST(Lstm, SingleUnitTwoStepMatchesOracle) {
  auto m = LstmModel::zeros(1, 2);
  for (std::size_t j = 0; j < kLstmInputs; ++j) {
    m.feature_min[j] = 0.0;
    m.feature_max[j] = 10.0;
  }
  const double ih[4] = {0.5, -0.3, 0.8, 0.2};
  for (Eigen::Index g = 0; g < 4; ++g) {
    for (Eigen::Index c = 0; c < 9; ++c) m.weight_ih(g, c) = ih[g] * (c % 2 ? 1.0 : -0.5);
    m.weight_hh(g, 0) = 0.1 * static_cast<double>(g + 1);
    m.bias_ih[g] = 0.05 * static_cast<double>(g);
    m.bias_hh[g] = -0.02;
  }
  m.dense_weight[0] = 1.7;
  m.dense_bias = 0.1;
  m.target_min = 15.0;
  m.target_max = 35.0;
  Window w;
  w.add({2, 3, 4, 5, 6, 7, 8, 9, 1});
  w.add({1, 2, 3, 4, 5, 6, 7, 8, 9});
  EXPECT_NEAR(predict_indoor_temperature(m, w.view()), oracle::lstm_forward(oracle_from_model(m), w.rows), 1e-12);
}

TEST(Lstm, RandomNetworksMatchOracle) {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const auto l = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const auto m = gridflex::testing::random_lstm(rng, static_cast<std::size_t>(rng.uniform_int(1, 8)), l);
    const auto w = random_window(rng, l + static_cast<std::size_t>(rng.uniform_int(0, 2)));
    std::vector<std::vector<double>> last(w.rows.end() - static_cast<std::ptrdiff_t>(l), w.rows.end());
    EXPECT_NEAR(predict_indoor_temperature(m, w.view()), oracle::lstm_forward(oracle_from_model(m), last), 1e-9);
  }
}

TEST(Lstm, FixtureNetworkMatchesOracleAndGolden) {
  const auto path = fixture_dir() / "lstm_Building_1.json";
  const auto model = load_lstm_model(path);
  const auto w = fixture_window();
  const double expected = oracle::lstm_forward(oracle::load_lstm(path), w.rows);
  const double got = predict_indoor_temperature(model, w.view());
  EXPECT_NEAR(got, expected, 1e-9);
  EXPECT_EQ(got, predict_indoor_temperature(model, w.view()));

  const auto golden = fixture_dir() / "golden" / "lstm_prediction.txt";
  if (std::getenv("GRIDFLEX_UPDATE_GOLDEN")) {
    std::FILE* f = std::fopen(golden.c_str(), "w");
    std::fprintf(f, "%.17g\n", expected);
    std::fclose(f);
  }
  const double stored = std::stod(gridflex::testing::read_file(golden));
  EXPECT_NEAR(got, stored, 1e-12);
  EXPECT_EQ(stored, expected);
}

TEST(Lstm, ShortWindowIsNotWarm) {
  const auto m = LstmModel::zeros(2, 3);
  Rng rng(2);
  const auto w = random_window(rng, 2);
  EXPECT_ERROR_KIND(predict_indoor_temperature(m, w.view()), ErrorKind::WindowNotWarm);
}

TEST(Lstm, JsonRoundTrip) {
  Rng rng(4);
  const auto m = gridflex::testing::random_lstm(rng, 5, 4);
  const auto back = lstm_from_json(lstm_to_json(m));
  EXPECT_EQ(back.lookback, m.lookback);
  EXPECT_EQ(back.weight_ih, m.weight_ih);
  EXPECT_EQ(back.weight_hh, m.weight_hh);
  EXPECT_EQ(back.bias_ih, m.bias_ih);
  EXPECT_EQ(back.dense_weight, m.dense_weight);
  EXPECT_EQ(back.dense_bias, m.dense_bias);
  EXPECT_EQ(back.feature_min, m.feature_min);
  EXPECT_EQ(back.target_max, m.target_max);
}

TEST(Lstm, MalformedWeightsRejected) {
  Rng rng(4);
  auto j = lstm_to_json(gridflex::testing::random_lstm(rng, 2, 2));
  j["weight_hh"]["shape"] = {8, 3};
  EXPECT_ERROR_KIND(lstm_from_json(j), ErrorKind::ConfigInvalid);
  auto k = lstm_to_json(gridflex::testing::random_lstm(rng, 2, 2));
  k["feature_min"][0] = 100.0;
  EXPECT_ERROR_KIND(lstm_from_json(k), ErrorKind::ConfigInvalid);
  EXPECT_ERROR_KIND(load_lstm_model("/nonexistent.json"), ErrorKind::MissingFile);
}

TEST(Lstm, ClosedLoopRolloutIsDeterministic) {
  const auto district = gridflex::testing::share(load_district(gridflex::testing::fixture_schema()));
  auto run = [&] {
    Env env(district);
    env.reset(5);
    std::vector<double> temps;
    while (!env.terminated()) {
      Actions a;
      for (std::size_t i = 0; i < env.agent_count(); ++i) a.push_back(baseline_act(env.action_space(i)));
      temps.push_back(env.step(a).info.records[0].indoor_temperature);
    }
    return temps;
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a, b);
  const auto& dataset = district->buildings[0].series.numeric.at("indoor_dry_bulb_temperature");
  const auto l = district->buildings[0].lstm->lookback;
  for (std::size_t t = 0; t < l; ++t) EXPECT_EQ(a[t], dataset[t]);
  bool predicted = false;
  for (std::size_t t = l; t < a.size(); ++t) predicted = predicted || a[t] != dataset[t];
  EXPECT_TRUE(predicted);
}
