#pragma once

#include <vector>

namespace xdiff {

/// Forward-process constants: beta[t] in (0,1) and the cumulative signal
/// retention alpha_bar[t] = prod_{s<=t} (1 - beta[s]); t is 1-based in the
/// public API.
struct NoiseSchedule {
  NoiseSchedule(int t_count, std::vector<double> beta_);

  int T() const { return static_cast<int>(beta.size()); }
  double beta_at(int t) const;       // t in [1, T]
  double alpha_bar_at(int t) const;  // t in [0, T]; alpha_bar(0) == 1

  std::vector<double> beta;
  std::vector<double> alpha_bar;
};

/// Betas linearly interpolated from beta_start to beta_end inclusive.
NoiseSchedule linear_schedule(int t_count, double beta_start, double beta_end);

}  // namespace xdiff
