#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gridflex/error.hpp"
#include "gridflex/random.hpp"

namespace gridflex {

struct OutageModel {
  double saifi = 0.0;   // events per year
  double caidi = 0.0;   // minutes per event
  std::uint64_t seed = 0;

  bool operator==(const OutageModel&) const = default;
};

inline void validate(const OutageModel& model) {
  if (!(model.saifi >= 0.0)) throw Error(ErrorKind::ConfigInvalid, "outage saifi must be >= 0");
  if (model.saifi > 0.0 && !(model.caidi > 0.0)) {
    throw Error(ErrorKind::ConfigInvalid, "outage caidi must be > 0 when saifi > 0");
  }
}

inline std::size_t steps_per_day(double seconds_per_step) {
  return static_cast<std::size_t>(std::max(1.0, std::round(86400.0 / seconds_per_step)));
}

struct OutageEvent {
  std::size_t start_step = 0;
  double duration_minutes = 0.0;
  std::size_t duration_steps = 0;
};

/// Draws one Bernoulli trial per day; an outage day gets a start hour
/// uniform on 0..23 and an exponential duration with mean CAIDI minutes,
/// rounded up to whole steps.
inline std::vector<OutageEvent> sample_outage_events(const OutageModel& model, std::size_t days,
                                                     double seconds_per_step, Rng& rng) {
  validate(model);
  std::vector<OutageEvent> events;
  if (model.saifi == 0.0) return events;
  const double p = std::min(1.0, model.saifi / 365.0);
  const std::size_t day_steps = steps_per_day(seconds_per_step);
  for (std::size_t day = 0; day < days; ++day) {
    if (!rng.bernoulli(p)) continue;
    const auto hour = static_cast<double>(rng.uniform_int(0, 23));
    const double minutes = rng.exponential_with_mean(model.caidi);
    OutageEvent e;
    e.start_step = day * day_steps + static_cast<std::size_t>(std::floor(hour * 3600.0 / seconds_per_step));
    e.duration_minutes = minutes;
    e.duration_steps = static_cast<std::size_t>(std::ceil(minutes * 60.0 / seconds_per_step));
    events.push_back(e);
  }
  return events;
}

/// Binary signal over the horizon. Overlapping events, including ones that
/// run past midnight into the next day's event, merge into one.
inline std::vector<int> generate_outage_signal(const OutageModel& model, std::size_t horizon,
                                               double seconds_per_step) {
  std::vector<int> signal(horizon, 0);
  const std::size_t day_steps = steps_per_day(seconds_per_step);
  const std::size_t days = (horizon + day_steps - 1) / day_steps;
  Rng rng(model.seed);
  for (const auto& e : sample_outage_events(model, days, seconds_per_step, rng)) {
    const std::size_t end = std::min(horizon, e.start_step + e.duration_steps);
    for (std::size_t t = e.start_step; t < end; ++t) signal[t] = 1;
  }
  return signal;
}

/// Terms of one step that matter for the outage budget. Generation and
/// discharge are magnitudes, consumption covers devices, non-shiftable load
/// and charging.
struct SupplyTerms {
  double pv_generation = 0.0;
  double storage_discharge = 0.0;
  double consumption = 0.0;
};

inline constexpr double kUnboundedSupply = std::numeric_limits<double>::infinity();

/// Energy the building may still draw during an outage. A negative value is
/// demand that cannot be served. Without an outage the grid is unbounded.
inline double available_supply(const SupplyTerms& terms, bool outage) {
  if (!outage) return kUnboundedSupply;
  return std::abs(terms.pv_generation) + terms.storage_discharge - terms.consumption;
}

}  // namespace gridflex
