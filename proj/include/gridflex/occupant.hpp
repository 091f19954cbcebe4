#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gridflex/error.hpp"
#include "gridflex/random.hpp"

namespace gridflex {

enum class OverrideDirection { increase, decrease };

/// Logistic thermostat-override model. An empty month list applies all year;
/// otherwise several coefficient sets can cover different seasons.
struct OccupantCoefficients {
  double a = 0.0;  // intercept
  double b = 0.0;  // per degC of indoor temperature
  OverrideDirection direction = OverrideDirection::increase;
  double magnitude_small = 0.25;
  double magnitude_large = 1.0;
  double p_large = 0.0;
  std::vector<int> months;

  bool operator==(const OccupantCoefficients&) const = default;
};

inline void validate(const OccupantCoefficients& c) {
  if (!(c.p_large >= 0.0 && c.p_large <= 1.0)) throw Error(ErrorKind::ConfigInvalid, "occupant p_large must be in [0, 1]");
  if (!(c.magnitude_small > 0.0 && c.magnitude_large > 0.0)) {
    throw Error(ErrorKind::ConfigInvalid, "occupant override magnitudes must be > 0");
  }
  for (int m : c.months) {
    if (m < 1 || m > 12) throw Error(ErrorKind::ConfigInvalid, "occupant month " + std::to_string(m) + " out of 1..12");
  }
}

inline double override_probability(double indoor_temperature, const OccupantCoefficients& c) {
  return 1.0 / (1.0 + std::exp(-(c.a + c.b * indoor_temperature)));
}

/// Setpoint change in degC, 0 when nobody is home or no override happens.
inline double sample_setpoint_override(double indoor_temperature, const OccupantCoefficients& c, bool occupied,
                                       Rng& rng) {
  if (!occupied) return 0.0;
  if (!rng.bernoulli(override_probability(indoor_temperature, c))) return 0.0;
  const double magnitude = rng.bernoulli(c.p_large) ? c.magnitude_large : c.magnitude_small;
  return c.direction == OverrideDirection::increase ? magnitude : -magnitude;
}

/// First coefficient set whose month list contains month (or is empty).
inline const OccupantCoefficients* coefficients_for_month(const std::vector<OccupantCoefficients>& sets, int month) {
  for (const auto& c : sets) {
    if (c.months.empty()) return &c;
    for (int m : c.months) {
      if (m == month) return &c;
    }
  }
  return nullptr;
}

}  // namespace gridflex
