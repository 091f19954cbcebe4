#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "gridflex/flat.hpp"
#include "test_support.hpp"

using namespace gridflex;
using namespace gridflex::testing;

TEST(FlatEnv, SpacesConcatenateAgents) {
  auto flat = FlatEnv::make(fixture_schema());
  const auto& s = flat.spaces();
  EXPECT_EQ(s.observation_arity.size(), 2u);
  EXPECT_EQ(s.action_arity, (std::vector<std::size_t>{5, 3}));
  EXPECT_EQ(s.action_names.front(), "Building_1/cooling_storage");
  EXPECT_EQ(s.action_names.back(), "Building_2/heating_device");
  for (std::size_t i = 0; i < s.action_names.size(); ++i) {
    const bool device = s.action_names[i].ends_with("_device");
    EXPECT_EQ(s.action_low[i], device ? 0.0 : -1.0) << s.action_names[i];
    EXPECT_EQ(s.action_high[i], 1.0);
  }
  std::size_t total = 0;
  for (auto n : s.observation_arity) total += n;
  EXPECT_EQ(total, s.observation_names.size());
  EXPECT_EQ(flat.reset().size(), total);
}

TEST(FlatEnv, MatchesNestedEnv) {
  auto district = share(load_district(fixture_schema()));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    FlatEnv flat(district, seed);
    Env env(district);
    auto obs = env.reset(seed);
    auto flat_obs = flat.reset();
    Rng rng(seed);
    for (int t = 0; t < 24; ++t) {
      std::vector<double> joined;
      for (const auto& o : obs) joined.insert(joined.end(), o.begin(), o.end());
      ASSERT_EQ(flat_obs, joined);
      const auto actions = random_actions(env, rng);
      std::vector<double> flat_actions;
      for (const auto& a : actions) flat_actions.insert(flat_actions.end(), a.begin(), a.end());
      const auto r = env.step(actions);
      const auto f = flat.step(flat_actions);
      EXPECT_EQ(f.rewards, r.rewards);
      EXPECT_EQ(f.terminated, r.terminated);
      EXPECT_EQ(f.info.at("district_net_electricity_consumption"), r.info.district_net);
      EXPECT_EQ(f.info.at("clipped"), r.info.clipped ? 1.0 : 0.0);
      EXPECT_EQ(f.info.at("time_step"), static_cast<double>(t + 1));
      obs = r.observations;
      flat_obs = f.observations;
    }
    EXPECT_TRUE(flat.env().terminated());
  }
}

TEST(FlatEnv, Errors) {
  auto flat = FlatEnv::make(fixture_schema(), 1);
  flat.reset();
  EXPECT_ERROR_KIND(flat.step({0.0}), ErrorKind::ActionArityMismatch);
  const std::vector<double> idle(flat.spaces().action_names.size(), 0.0);
  for (int t = 0; t < 24; ++t) flat.step(idle);
  EXPECT_ERROR_KIND(flat.step(idle), ErrorKind::EpisodeFinished);
  EXPECT_ERROR_KIND(FlatEnv::make("/no/such/schema.json"), ErrorKind::MissingFile);
}
