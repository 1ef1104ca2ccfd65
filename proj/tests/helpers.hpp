#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "monopf/grid.hpp"
#include "monopf/pf.hpp"

namespace testutil {

inline std::string data_path(const std::string& file) { return std::string(MONOPF_DATA_DIR) + "/" + file; }

inline monopf::Network load_case(const std::string& name) { return monopf::load_network(data_path(name + ".m")); }

/// Slack + one PQ bus joined by a line with y = g - jb.
inline monopf::Network two_bus(double g = 0.0, double b = 1.0) {
  return monopf::Network("two_bus", {{1, monopf::BusType::slack, 1.0}, {2, monopf::BusType::pq, 1.0}},
                         {{0, 1, {g, -b}}});
}

inline double deg(double d) { return d * std::numbers::pi / 180.0; }

/// Angles uniform in (-amax, amax), log-magnitudes uniform in (-rmax, rmax).
inline monopf::Vector random_state(const monopf::Network& net, std::mt19937_64& rng, double amax = 0.6,
                                   double rmax = 0.1) {
  std::uniform_real_distribution<double> ua(-amax, amax);
  std::uniform_real_distribution<double> ur(-rmax, rmax);
  monopf::Vector x(net.dim());
  const auto nt = static_cast<int>(net.nsb().size());
  for (int a = 0; a < net.dim(); ++a) x[a] = a < nt ? ua(rng) : ur(rng);
  return x;
}

}  // namespace testutil
