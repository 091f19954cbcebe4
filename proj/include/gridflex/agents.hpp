#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridflex/building.hpp"
#include "gridflex/env.hpp"
#include "gridflex/error.hpp"
#include "gridflex/random.hpp"

namespace gridflex {

// ---------------------------------------------------------------------------
// Stateless policies

/// Storages idle, devices follow their ideal loads.
inline std::vector<double> baseline_act(std::span<const AgentActionSlot> slots) {
  std::vector<double> out;
  for (const auto& s : slots) out.push_back(s.kind == ActionKind::device ? kIdealLoad : 0.0);
  return out;
}

inline std::vector<double> random_act(std::span<const AgentActionSlot> slots, Rng& rng) {
  std::vector<double> out;
  for (const auto& s : slots) out.push_back(rng.uniform(s.low, s.high));
  return out;
}

/// hour (0..23) -> action name -> value, for one building.
using HourRule = std::map<int, std::map<std::string, double>>;

/// Per-building rules; the key "*" applies to buildings without their own.
using HourRules = std::map<std::string, HourRule>;

inline HourRules parse_hour_rules(const nlohmann::json& j) {
  HourRules rules;
  try {
    for (const auto& [building, hours] : j.items()) {
      HourRule rule;
      for (const auto& [hour, actions] : hours.items()) {
        const int h = std::stoi(hour);
        if (h < 0 || h > 23 || std::to_string(h) != hour) {
          throw Error(ErrorKind::ConfigInvalid, "rule hour " + hour + " must be an integer in 0..23");
        }
        rule[h] = actions.get<std::map<std::string, double>>();
      }
      rules[building] = std::move(rule);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, std::string("hour rules: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorKind::ConfigInvalid, "hour rules: hour keys must be integers");
  }
  return rules;
}

/// Looks up the hour's template. Unmapped hours and actions give 0 for
/// storages and the ideal-load sentinel for devices.
inline std::vector<double> hour_rbc_act(int hour, const HourRule& rule, std::span<const AgentActionSlot> slots) {
  auto out = baseline_act(slots);
  const auto it = rule.find(hour);
  if (it == rule.end()) return out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto a = it->second.find(slots[i].name);
    if (a != it->second.end()) out[i] = a->second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tabular Q-learning

struct QLearningParams {
  double alpha = 0.5;
  double gamma = 0.9;
  double epsilon = 0.1;
  double epsilon_decay = 0.99;  // multiplied in after every episode
  double epsilon_min = 0.01;
  std::size_t bins = 12;
  std::size_t hour_bins = 24;
  std::size_t action_bins = 5;
};

inline void validate(const QLearningParams& p) {
  if (!(p.alpha > 0.0 && p.alpha <= 1.0)) throw Error(ErrorKind::ConfigInvalid, "alpha must be in (0, 1]");
  if (!(p.gamma >= 0.0 && p.gamma <= 1.0)) throw Error(ErrorKind::ConfigInvalid, "gamma must be in [0, 1]");
  if (!(p.epsilon >= 0.0 && p.epsilon <= 1.0)) throw Error(ErrorKind::ConfigInvalid, "epsilon must be in [0, 1]");
  if (!(p.epsilon_decay > 0.0 && p.epsilon_decay <= 1.0)) throw Error(ErrorKind::ConfigInvalid, "epsilon_decay must be in (0, 1]");
  if (p.bins < 1 || p.hour_bins < 1 || p.action_bins < 2) throw Error(ErrorKind::ConfigInvalid, "bin counts too small");
}

/// Sparse Q table over integer states; unseen states read as all zeros.
class QTable {
 public:
  QTable(std::size_t actions, QLearningParams params) : actions_(actions), params_(params) {
    validate(params_);
    if (actions_ == 0) throw Error(ErrorKind::ConfigInvalid, "Q table needs at least one action");
  }

  std::size_t action_count() const { return actions_; }
  const QLearningParams& params() const { return params_; }
  double epsilon() const { return params_.epsilon; }
  void set_epsilon(double e) { params_.epsilon = e; }

  double value(std::uint64_t s, std::size_t a) const {
    auto it = table_.find(s);
    return it == table_.end() ? 0.0 : it->second[a];
  }

  void set(std::uint64_t s, std::size_t a, double v) { row(s)[a] = v; }

  /// Lowest index among the maximal entries.
  std::size_t greedy(std::uint64_t s) const {
    auto it = table_.find(s);
    if (it == table_.end()) return 0;
    const auto& q = it->second;
    return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
  }

  double max_value(std::uint64_t s) const {
    auto it = table_.find(s);
    if (it == table_.end()) return 0.0;
    return *std::max_element(it->second.begin(), it->second.end());
  }

  void decay_epsilon() { params_.epsilon = std::max(params_.epsilon_min, params_.epsilon * params_.epsilon_decay); }

  std::size_t state_count() const { return table_.size(); }

 private:
  std::vector<double>& row(std::uint64_t s) {
    auto it = table_.find(s);
    if (it == table_.end()) it = table_.emplace(s, std::vector<double>(actions_, 0.0)).first;
    return it->second;
  }

  std::size_t actions_;
  QLearningParams params_;
  std::unordered_map<std::uint64_t, std::vector<double>> table_;
};

/// Epsilon-greedy choice.
inline std::size_t q_act(const QTable& q, std::uint64_t state, Rng& rng) {
  if (rng.uniform() < q.epsilon()) {
    return static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(q.action_count()) - 1));
  }
  return q.greedy(state);
}

/// One-step TD update. A terminal transition has no bootstrap term.
inline void q_update(QTable& q, std::uint64_t s, std::size_t a, double r, std::uint64_t s_next, bool terminal = false) {
  const double target = r + (terminal ? 0.0 : q.params().gamma * q.max_value(s_next));
  const double current = q.value(s, a);
  q.set(s, a, current + q.params().alpha * (target - current));
}

/// Uniform bins per dimension; values outside the range are clamped.
class Discretizer {
 public:
  Discretizer() = default;

  void add(double low, double high, std::size_t bins) {
    low_.push_back(low);
    high_.push_back(high);
    bins_.push_back(std::max<std::size_t>(bins, 1));
  }

  std::size_t dimensions() const { return bins_.size(); }

  std::size_t bin(std::size_t dim, double value) const {
    const double span = high_[dim] - low_[dim];
    if (!(span > 0.0) || std::isnan(value)) return 0;
    const double x = (std::clamp(value, low_[dim], high_[dim]) - low_[dim]) / span;
    return std::min(bins_[dim] - 1, static_cast<std::size_t>(x * static_cast<double>(bins_[dim])));
  }

  /// Mixed-radix index of the bin tuple.
  std::uint64_t index(std::span<const double> values) const {
    std::uint64_t idx = 0;
    for (std::size_t d = 0; d < bins_.size(); ++d) idx = idx * bins_[d] + bin(d, values[d]);
    return idx;
  }

 private:
  std::vector<double> low_, high_;
  std::vector<std::size_t> bins_;
};

// ---------------------------------------------------------------------------
// Agents driving an Env

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual Actions act(const Env& env, const Observations& observations) = 0;
  virtual void learn(const Observations& /*before*/, const StepResult& /*after*/) {}
  virtual void end_episode() {}
  virtual bool learns() const { return false; }
};

class BaselineAgent : public Agent {
 public:
  std::string name() const override { return "baseline"; }
  Actions act(const Env& env, const Observations&) override {
    Actions out;
    for (std::size_t a = 0; a < env.agent_count(); ++a) out.push_back(baseline_act(env.action_space(a)));
    return out;
  }
};

class RandomAgent : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}
  std::string name() const override { return "random"; }
  Actions act(const Env& env, const Observations&) override {
    Actions out;
    for (std::size_t a = 0; a < env.agent_count(); ++a) out.push_back(random_act(env.action_space(a), rng_));
    return out;
  }

 private:
  Rng rng_;
};

class HourRBCAgent : public Agent {
 public:
  HourRBCAgent(const Env& env, HourRules rules) : rules_(std::move(rules)) {
    for (std::size_t a = 0; a < env.agent_count(); ++a) {
      for (const auto& slot : env.action_space(a)) {
        const auto* rule = rule_for(env.config().buildings[slot.building].name);
        if (!rule) continue;
        for (const auto& [hour, actions] : *rule) {
          auto it = actions.find(slot.name);
          if (it != actions.end() && !(it->second >= slot.low && it->second <= slot.high)) {
            throw Error(ErrorKind::ConfigInvalid, "rule value for " + slot.name + " at hour " + std::to_string(hour) +
                                                      " is outside its action bounds");
          }
        }
      }
    }
  }

  std::string name() const override { return "hour_rbc"; }

  Actions act(const Env& env, const Observations&) override {
    Actions out;
    for (std::size_t a = 0; a < env.agent_count(); ++a) {
      const auto& slots = env.action_space(a);
      std::vector<double> values = baseline_act(slots);
      for (std::size_t i = 0; i < slots.size(); ++i) {
        const auto* rule = rule_for(env.config().buildings[slots[i].building].name);
        if (!rule) continue;
        const int hour = static_cast<int>(env.hour(slots[i].building));
        values[i] = hour_rbc_act(hour, *rule, std::span(slots).subspan(i, 1))[0];
      }
      out.push_back(std::move(values));
    }
    return out;
  }

 private:
  const HourRule* rule_for(const std::string& building) const {
    auto it = rules_.find(building);
    if (it == rules_.end()) it = rules_.find("*");
    return it == rules_.end() ? nullptr : &it->second;
  }

  HourRules rules_;
};

/// Tabular Q-learning over the discretized observation vector. Each action
/// slot has its own table over `action_bins` evenly spaced values; all slots
/// of an agent see the same state and learn from the agent's reward.
class QLearningAgent : public Agent {
 public:
  QLearningAgent(const Env& env, QLearningParams params, std::uint64_t seed) : rng_(seed), bins_(params.action_bins) {
    validate(params);
    for (std::size_t a = 0; a < env.agent_count(); ++a) {
      Discretizer d;
      for (const auto& slot : env.observation_space(a)) {
        d.add(slot.low, slot.high, slot.name == "hour" ? params.hour_bins : params.bins);
      }
      discretizers_.push_back(std::move(d));
      const auto& slots = env.action_space(a);
      tables_.emplace_back(slots.size(), QTable(bins_, params));
      action_slots_.push_back(slots);
      last_.emplace_back(slots.size(), 0);
    }
  }

  std::string name() const override { return "q_learning"; }
  bool learns() const override { return true; }
  const QTable& table(std::size_t agent, std::size_t slot) const { return tables_.at(agent).at(slot); }

  Actions act(const Env&, const Observations& observations) override {
    Actions out;
    for (std::size_t a = 0; a < tables_.size(); ++a) {
      const auto state = discretizers_[a].index(observations[a]);
      std::vector<double> values;
      for (std::size_t i = 0; i < tables_[a].size(); ++i) {
        last_[a][i] = q_act(tables_[a][i], state, rng_);
        const auto& slot = action_slots_[a][i];
        values.push_back(slot.low + (slot.high - slot.low) * static_cast<double>(last_[a][i]) / static_cast<double>(bins_ - 1));
      }
      out.push_back(std::move(values));
    }
    return out;
  }

  void learn(const Observations& before, const StepResult& after) override {
    for (std::size_t a = 0; a < tables_.size(); ++a) {
      const auto s = discretizers_[a].index(before[a]);
      const auto s_next = discretizers_[a].index(after.observations[a]);
      for (std::size_t i = 0; i < tables_[a].size(); ++i) {
        q_update(tables_[a][i], s, last_[a][i], after.rewards[a], s_next, after.terminated);
      }
    }
  }

  void end_episode() override {
    for (auto& agent : tables_) {
      for (auto& t : agent) t.decay_epsilon();
    }
  }

 private:
  Rng rng_;
  std::size_t bins_;
  std::vector<Discretizer> discretizers_;
  std::vector<std::vector<QTable>> tables_;  // [agent][action slot]
  std::vector<std::vector<AgentActionSlot>> action_slots_;
  std::vector<std::vector<std::size_t>> last_;
};

inline QLearningParams parse_q_params(const nlohmann::json& j) {
  QLearningParams p;
  if (j.is_null()) return p;
  try {
    p.alpha = j.value("alpha", p.alpha);
    p.gamma = j.value("gamma", p.gamma);
    p.epsilon = j.value("epsilon", p.epsilon);
    p.epsilon_decay = j.value("epsilon_decay", p.epsilon_decay);
    p.epsilon_min = j.value("epsilon_min", p.epsilon_min);
    p.bins = j.value("bins", p.bins);
    p.hour_bins = j.value("hour_bins", p.hour_bins);
    p.action_bins = j.value("action_bins", p.action_bins);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, std::string("q_learning parameters: ") + e.what());
  }
  validate(p);
  return p;
}

inline const std::vector<std::string>& agent_names() {
  static const std::vector<std::string> names{"baseline", "random", "hour_rbc", "q_learning"};
  return names;
}

/// Builds an agent by name. params carries "rules" for hour_rbc and the
/// hyperparameters for q_learning.
inline std::unique_ptr<Agent> make_agent(const std::string& name, const Env& env, const nlohmann::json& params,
                                         std::uint64_t seed) {
  if (name == "baseline") return std::make_unique<BaselineAgent>();
  if (name == "random") return std::make_unique<RandomAgent>(seed);
  if (name == "hour_rbc") {
    const auto rules = params.is_object() && params.contains("rules") ? params.at("rules") : nlohmann::json::object();
    return std::make_unique<HourRBCAgent>(env, parse_hour_rules(rules));
  }
  if (name == "q_learning") return std::make_unique<QLearningAgent>(env, parse_q_params(params), seed);
  throw Error(ErrorKind::ConfigInvalid, "unknown agent " + name);
}

}  // namespace gridflex
