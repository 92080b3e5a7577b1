#include "xdiff/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace xdiff {

NoiseSchedule::NoiseSchedule(int t_count, std::vector<double> beta_) : beta(std::move(beta_)) {
  if (t_count < 1) throw std::invalid_argument("NoiseSchedule: T must be >= 1");
  if (beta.size() != static_cast<std::size_t>(t_count)) {
    throw std::invalid_argument("NoiseSchedule: beta length does not equal T");
  }
  alpha_bar.resize(beta.size());
  double prod = 1.0;
  double prev = 2.0;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    const double b = beta[i];
    if (!(b > 0.0 && b < 1.0) || !std::isfinite(b)) {
      throw std::invalid_argument("NoiseSchedule: beta must lie in (0, 1)");
    }
    prod *= 1.0 - b;
    if (prod >= prev) throw std::invalid_argument("NoiseSchedule: alpha_bar not decreasing");
    alpha_bar[i] = prod;
    prev = prod;
  }
}

double NoiseSchedule::beta_at(int t) const {
  if (t < 1 || t > T()) throw std::out_of_range("NoiseSchedule: t out of range");
  return beta[t - 1];
}

double NoiseSchedule::alpha_bar_at(int t) const {
  if (t == 0) return 1.0;
  if (t < 1 || t > T()) throw std::out_of_range("NoiseSchedule: t out of range");
  return alpha_bar[t - 1];
}

NoiseSchedule linear_schedule(int t_count, double beta_start, double beta_end) {
  if (t_count < 1) throw std::invalid_argument("linear_schedule: T must be >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw std::invalid_argument("linear_schedule: need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> beta(t_count);
  if (t_count == 1) {
    beta[0] = beta_start;
  } else {
    for (int i = 0; i < t_count; ++i) {
      beta[i] = beta_start + (beta_end - beta_start) * i / (t_count - 1);
    }
  }
  return NoiseSchedule(t_count, std::move(beta));
}

}  // namespace xdiff
