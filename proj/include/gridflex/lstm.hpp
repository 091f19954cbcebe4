#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gridflex/error.hpp"

namespace gridflex {

/// Input feature order of the thermal model. Position 0 is the lagged indoor
/// temperature; the rest are the exogenous features of the same window slot.
inline constexpr std::array<const char*, 9> kLstmFeatures = {
    "indoor_dry_bulb_temperature", "outdoor_dry_bulb_temperature", "thermal_load",
    "direct_solar_irradiance",     "diffuse_solar_irradiance",     "occupant_count",
    "month",                       "day_type",                     "hour"};

inline constexpr std::size_t kLstmInputs = kLstmFeatures.size();
inline constexpr std::size_t kLstmExogenous = kLstmInputs - 1;

using ExogenousFeatures = std::array<double, kLstmExogenous>;

/// Single-layer LSTM with a dense scalar head, gates stacked in i, f, g, o
/// order. Inputs are min-max normalized; the output is denormalized with the
/// target bounds.
struct LstmModel {
  std::size_t lookback = 12;
  Eigen::MatrixXd weight_ih;  // 4H x inputs
  Eigen::MatrixXd weight_hh;  // 4H x H
  Eigen::VectorXd bias_ih;    // 4H
  Eigen::VectorXd bias_hh;    // 4H
  Eigen::RowVectorXd dense_weight;  // 1 x H
  double dense_bias = 0.0;
  std::array<double, kLstmInputs> feature_min{};
  std::array<double, kLstmInputs> feature_max{};
  double target_min = 0.0;
  double target_max = 1.0;

  std::size_t hidden_size() const { return static_cast<std::size_t>(weight_hh.cols()); }

  static LstmModel zeros(std::size_t hidden, std::size_t lookback = 12) {
    LstmModel m;
    const auto h = static_cast<Eigen::Index>(hidden);
    m.lookback = lookback;
    m.weight_ih = Eigen::MatrixXd::Zero(4 * h, kLstmInputs);
    m.weight_hh = Eigen::MatrixXd::Zero(4 * h, h);
    m.bias_ih = Eigen::VectorXd::Zero(4 * h);
    m.bias_hh = Eigen::VectorXd::Zero(4 * h);
    m.dense_weight = Eigen::RowVectorXd::Zero(h);
    m.feature_min.fill(0.0);
    m.feature_max.fill(1.0);
    return m;
  }

  void validate() const {
    const auto h = weight_hh.cols();
    if (lookback < 1) throw Error(ErrorKind::ConfigInvalid, "lstm lookback must be >= 1");
    if (h < 1 || weight_hh.rows() != 4 * h) throw Error(ErrorKind::ConfigInvalid, "lstm weight_hh must be 4H x H");
    if (weight_ih.rows() != 4 * h || weight_ih.cols() != static_cast<Eigen::Index>(kLstmInputs)) {
      throw Error(ErrorKind::ConfigInvalid, "lstm weight_ih must be 4H x 9");
    }
    if (bias_ih.size() != 4 * h || bias_hh.size() != 4 * h) throw Error(ErrorKind::ConfigInvalid, "lstm biases must have 4H entries");
    if (dense_weight.size() != h) throw Error(ErrorKind::ConfigInvalid, "lstm dense_weight must have H entries");
    for (std::size_t i = 0; i < kLstmInputs; ++i) {
      if (!(feature_min[i] < feature_max[i])) {
        throw Error(ErrorKind::ConfigInvalid, std::string("lstm bounds for ") + kLstmFeatures[i] + " need min < max");
      }
    }
    if (!(target_min < target_max)) throw Error(ErrorKind::ConfigInvalid, "lstm target bounds need min < max");
  }
};

/// Inputs for one prediction of T_in at step t. indoor_temperature holds
/// t-l .. t-1 and exogenous holds t-l+1 .. t, both oldest first, so slot k
/// pairs the temperature one step before the exogenous row it sits with.
struct LstmWindow {
  std::span<const double> indoor_temperature;
  std::span<const ExogenousFeatures> exogenous;
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

inline double predict_indoor_temperature(const LstmModel& model, const LstmWindow& window) {
  const std::size_t l = model.lookback;
  if (window.indoor_temperature.size() < l || window.exogenous.size() < l) {
    throw Error(ErrorKind::WindowNotWarm, "need " + std::to_string(l) + " steps of history");
  }
  const auto temps = window.indoor_temperature.last(l);
  const auto exo = window.exogenous.last(l);
  const auto h = static_cast<Eigen::Index>(model.hidden_size());

  Eigen::VectorXd hidden = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd cell = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd x(static_cast<Eigen::Index>(kLstmInputs));
  for (std::size_t k = 0; k < l; ++k) {
    x[0] = temps[k];
    for (std::size_t j = 0; j < kLstmExogenous; ++j) x[static_cast<Eigen::Index>(j + 1)] = exo[k][j];
    for (std::size_t j = 0; j < kLstmInputs; ++j) {
      const auto i = static_cast<Eigen::Index>(j);
      x[i] = (x[i] - model.feature_min[j]) / (model.feature_max[j] - model.feature_min[j]);
    }
    const Eigen::VectorXd gates = model.weight_ih * x + model.bias_ih + model.weight_hh * hidden + model.bias_hh;
    for (Eigen::Index u = 0; u < h; ++u) {
      const double in = detail::sigmoid(gates[u]);
      const double forget = detail::sigmoid(gates[h + u]);
      const double candidate = std::tanh(gates[2 * h + u]);
      const double out = detail::sigmoid(gates[3 * h + u]);
      cell[u] = forget * cell[u] + in * candidate;
      hidden[u] = out * std::tanh(cell[u]);
    }
  }
  const double normalized = model.dense_weight.dot(hidden) + model.dense_bias;
  return normalized * (model.target_max - model.target_min) + model.target_min;
}

// ---------------------------------------------------------------------------
// JSON weight file: named arrays, each {"shape": [...], "data": [row-major]}.

namespace detail {

inline Eigen::MatrixXd read_matrix(const nlohmann::json& j, const char* name, Eigen::Index rows_hint = -1) {
  if (!j.contains(name)) throw Error(ErrorKind::ConfigInvalid, std::string("lstm model missing ") + name);
  const auto& entry = j.at(name);
  const auto shape = entry.at("shape").get<std::vector<Eigen::Index>>();
  const auto data = entry.at("data").get<std::vector<double>>();
  Eigen::Index rows = 0, cols = 0;
  if (shape.size() == 1) {
    rows = rows_hint < 0 ? shape[0] : 1;
    cols = rows_hint < 0 ? 1 : shape[0];
  } else if (shape.size() == 2) {
    rows = shape[0];
    cols = shape[1];
  } else {
    throw Error(ErrorKind::ConfigInvalid, std::string("lstm ") + name + " must be 1-D or 2-D");
  }
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw Error(ErrorKind::ConfigInvalid, std::string("lstm ") + name + " data does not match its shape");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

inline nlohmann::json write_matrix(const Eigen::MatrixXd& m, bool vector) {
  std::vector<double> data;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  nlohmann::json shape = vector ? nlohmann::json::array({m.size()}) : nlohmann::json::array({m.rows(), m.cols()});
  return {{"shape", shape}, {"data", data}};
}

}  // namespace detail

inline LstmModel lstm_from_json(const nlohmann::json& j) {
  LstmModel m;
  try {
    m.lookback = j.value("lookback", std::size_t{12});
    if (j.contains("features")) {
      const auto names = j.at("features").get<std::vector<std::string>>();
      if (names.size() != kLstmInputs) throw Error(ErrorKind::ConfigInvalid, "lstm features must list 9 names");
      for (std::size_t i = 0; i < kLstmInputs; ++i) {
        if (names[i] != kLstmFeatures[i]) {
          throw Error(ErrorKind::ConfigInvalid, "lstm feature " + std::to_string(i) + " must be " + kLstmFeatures[i]);
        }
      }
    }
    m.weight_ih = detail::read_matrix(j, "weight_ih");
    m.weight_hh = detail::read_matrix(j, "weight_hh");
    m.bias_ih = detail::read_matrix(j, "bias_ih");
    m.bias_hh = detail::read_matrix(j, "bias_hh");
    m.dense_weight = detail::read_matrix(j, "dense_weight", 1);
    const auto dense_bias = detail::read_matrix(j, "dense_bias");
    if (dense_bias.size() != 1) throw Error(ErrorKind::ConfigInvalid, "lstm dense_bias must hold one value");
    m.dense_bias = dense_bias(0, 0);
    const auto lo = j.at("feature_min").get<std::vector<double>>();
    const auto hi = j.at("feature_max").get<std::vector<double>>();
    if (lo.size() != kLstmInputs || hi.size() != kLstmInputs) {
      throw Error(ErrorKind::ConfigInvalid, "lstm feature bounds must have 9 entries");
    }
    std::copy(lo.begin(), lo.end(), m.feature_min.begin());
    std::copy(hi.begin(), hi.end(), m.feature_max.begin());
    m.target_min = j.value("target_min", m.feature_min[0]);
    m.target_max = j.value("target_max", m.feature_max[0]);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, std::string("lstm model: ") + e.what());
  }
  m.validate();
  return m;
}

inline nlohmann::json lstm_to_json(const LstmModel& m) {
  nlohmann::json j;
  j["lookback"] = m.lookback;
  j["hidden_size"] = m.hidden_size();
  j["features"] = std::vector<std::string>(kLstmFeatures.begin(), kLstmFeatures.end());
  j["weight_ih"] = detail::write_matrix(m.weight_ih, false);
  j["weight_hh"] = detail::write_matrix(m.weight_hh, false);
  j["bias_ih"] = detail::write_matrix(m.bias_ih, true);
  j["bias_hh"] = detail::write_matrix(m.bias_hh, true);
  j["dense_weight"] = detail::write_matrix(m.dense_weight, false);
  j["dense_bias"] = {{"shape", {1}}, {"data", {m.dense_bias}}};
  j["feature_min"] = m.feature_min;
  j["feature_max"] = m.feature_max;
  j["target_min"] = m.target_min;
  j["target_max"] = m.target_max;
  return j;
}

inline LstmModel load_lstm_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  return lstm_from_json(j);
}

}  // namespace gridflex
