#include "walkgossip/rng.hpp"

#include <cmath>

namespace wg {

double RngStream::exponential(double mean) { return -mean * std::log(uniform_open()); }

double RngStream::normal(double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  return dist(engine_);
}

double RngStream::gamma(double shape) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine_);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(engine_);
}

}  // namespace wg
