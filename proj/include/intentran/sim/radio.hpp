#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "intentran/core/errors.hpp"
#include "intentran/sim/config.hpp"

namespace intentran::sim {

/// Shannon rate of a bandwidth share: B·log2(1 + SINR).
inline double link_rate(double sinr_linear, double bandwidth_share_hz) {
  if (sinr_linear < 0.0 || bandwidth_share_hz < 0.0 || std::isnan(sinr_linear) || std::isnan(bandwidth_share_hz))
    throw DomainError("link_rate: inputs must be non-negative");
  return bandwidth_share_hz * std::log2(1.0 + sinr_linear);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

inline double thermal_noise_dbm(double bandwidth_hz, double noise_figure_db) {
  return -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
}

/// Log-distance pathloss anchored at free-space loss at 1 m.
inline double pathloss_db(double distance_m, const RatParams& rat) {
  const double d = std::max(distance_m, 1.0);
  const double fspl_1m = 20.0 * std::log10(rat.carrier_hz) - 147.55;
  return fspl_1m + 10.0 * rat.pathloss_exponent * std::log10(d);
}

/// Beam steering codebook with constant-modulus weights for a uniform linear array.
class BeamCodebook {
 public:
  BeamCodebook(std::size_t num_antennas, std::vector<double> steering_angles_rad)
      : num_antennas_(num_antennas), angles_(std::move(steering_angles_rad)) {
    if (num_antennas_ < 1 || angles_.empty()) throw ConfigurationError("beam codebook must be non-empty");
  }

  /// Evenly spaced steering angles around the full circle.
  static BeamCodebook uniform(std::size_t num_antennas, std::size_t size) {
    std::vector<double> a(size);
    for (std::size_t i = 0; i < size; ++i)
      a[i] = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(size);
    return BeamCodebook(num_antennas, std::move(a));
  }

  std::size_t size() const { return angles_.size(); }
  std::size_t num_antennas() const { return num_antennas_; }
  double angle(std::size_t i) const { return angles_.at(i); }
  const std::vector<double>& angles() const { return angles_; }

  /// Every element of a codebook vector has magnitude 1/sqrt(μ).
  double weight_magnitude() const { return 1.0 / std::sqrt(static_cast<double>(num_antennas_)); }

  double boresight_gain_db() const { return 10.0 * std::log10(static_cast<double>(num_antennas_)); }

  /// Boresight gain rolled off by the cosine of the pointing error, floored at 0 dB.
  double gain_db(std::size_t beam, double bearing_rad) const {
    const double c = std::cos(bearing_rad - angle(beam));
    return boresight_gain_db() * std::max(0.0, c);
  }

  /// Index of the beam whose steering angle is circularly nearest to the bearing.
  std::size_t nearest(double bearing_rad) const {
    std::size_t best = 0;
    double best_err = 10.0;
    for (std::size_t i = 0; i < angles_.size(); ++i) {
      double err = std::remainder(bearing_rad - angles_[i], 2.0 * std::numbers::pi);
      err = std::abs(err);
      if (err < best_err - 1e-12) {
        best_err = err;
        best = i;
      }
    }
    return best;
  }

 private:
  std::size_t num_antennas_;
  std::vector<double> angles_;
};

}  // namespace intentran::sim
