#pragma once

#include <string>

#include "xdiff/diffusion.hpp"

namespace xdiff::cli {

/// Training-run settings parsed from a "key = value" config file; unknown
/// keys are rejected.
struct RunConfig {
  TrainConfig train;
  int n_views = 1;
  double eta = 1.0;
  int sample_steps = 250;
  Aggregator aggregator = Aggregator::kMean;
  std::string data_dir;
  std::string checkpoint_out;
  std::string loss_csv_out;
  double beta_start = 1e-4;
  double beta_end = 2e-2;

  void validate() const;
};

RunConfig parse_run_config_text(const std::string& text);
RunConfig load_run_config(const std::string& path);

}  // namespace xdiff::cli
