#pragma once

#include <cmath>
#include <vector>

#include "intentran/core/errors.hpp"
#include "intentran/core/rng.hpp"
#include "intentran/sim/config.hpp"

namespace intentran::sim {

/// Pareto scale x_m giving the requested mean for shape a > 1: mean = x_m·a/(a−1).
constexpr double pareto_scale_for_mean(double mean, double shape = kParetoShape) {
  return mean * (shape - 1.0) / shape;
}

/// Draws one strictly positive inter-arrival gap.
inline double sample_interarrival(Distribution d, double mean, RngStream& rng) {
  switch (d) {
    case Distribution::poisson:
      return rng.exponential(mean);
    case Distribution::uniform:
      // uniform_open keeps the lower edge strictly positive
      return mean * (0.5 + rng.uniform_open());
    case Distribution::pareto:
      return pareto_scale_for_mean(mean) * std::pow(rng.uniform_open(), -1.0 / kParetoShape);
  }
  return mean;
}

inline RngStream arrival_stream(std::uint64_t seed, TrafficKind kind, std::uint64_t index = 0) {
  return RngStream(seed, stream_tag("arrivals") ^ (static_cast<std::uint64_t>(kind) + 1), index);
}

/// Arrival timestamps in (0, horizon]. Timestamps are strictly increasing.
inline std::vector<double> generate_arrivals(const TrafficClass& cls, double horizon_s, RngStream& rng) {
  if (!(horizon_s > 0.0)) throw ConfigurationError("generate_arrivals: horizon must be positive");
  if (!(cls.mean_interarrival_s > 0.0))
    throw ConfigurationError("generate_arrivals: mean inter-arrival must be positive");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(horizon_s / cls.mean_interarrival_s * 1.1) + 1);
  double t = 0.0;
  while (true) {
    t += sample_interarrival(cls.distribution, cls.mean_interarrival_s, rng);
    if (t > horizon_s) break;
    out.push_back(t);
  }
  return out;
}

}  // namespace intentran::sim
