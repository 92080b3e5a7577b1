#include "xdiff_cli/run_config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "xdiff/serialize.hpp"

namespace xdiff::cli {

namespace {

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  const double x = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("config: bad number for " + key);
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  const long long x = std::stoll(v, &used);
  if (used != v.size()) throw std::invalid_argument("config: bad integer for " + key);
  return x;
}

}  // namespace

void RunConfig::validate() const {
  if (n_views < 1) throw std::invalid_argument("config: n_views must be >= 1");
  if (train.k_slices < 1) throw std::invalid_argument("config: k_slices must be >= 1");
  if (sample_steps < 1 || sample_steps > train.t_count) {
    throw std::invalid_argument("config: sample_steps must lie in [1, timesteps]");
  }
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("config: eta must lie in [0, 1]");
  if (!(train.learning_rate > 0.0)) {
    throw std::invalid_argument("config: learning_rate must be > 0");
  }
  if (train.batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (train.steps < 1) throw std::invalid_argument("config: steps must be >= 1");
  if (train.side < 2) throw std::invalid_argument("config: side must be >= 2");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw std::invalid_argument("config: need 0 < beta_start <= beta_end < 1");
  }
  if (data_dir.empty()) throw std::invalid_argument("config: data_dir is required");
  if (checkpoint_out.empty()) throw std::invalid_argument("config: checkpoint_out is required");
}

RunConfig parse_run_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key or value");
    }

    if (key == "learning_rate") cfg.train.learning_rate = to_real(key, value);
    else if (key == "batch_size") cfg.train.batch_size = static_cast<int>(to_int(key, value));
    else if (key == "steps") cfg.train.steps = static_cast<int>(to_int(key, value));
    else if (key == "seed") cfg.train.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "side") cfg.train.side = static_cast<int>(to_int(key, value));
    else if (key == "timesteps") cfg.train.t_count = static_cast<int>(to_int(key, value));
    else if (key == "k_slices") cfg.train.k_slices = static_cast<int>(to_int(key, value));
    else if (key == "channels") cfg.train.channels = static_cast<int>(to_int(key, value));
    else if (key == "kernel") cfg.train.kernel = static_cast<int>(to_int(key, value));
    else if (key == "hidden_layers") cfg.train.hidden_layers = static_cast<int>(to_int(key, value));
    else if (key == "beta_start") cfg.beta_start = to_real(key, value);
    else if (key == "beta_end") cfg.beta_end = to_real(key, value);
    else if (key == "n_views") cfg.n_views = static_cast<int>(to_int(key, value));
    else if (key == "eta") cfg.eta = to_real(key, value);
    else if (key == "sample_steps") cfg.sample_steps = static_cast<int>(to_int(key, value));
    else if (key == "aggregator") {
      if (value == "mean") cfg.aggregator = Aggregator::kMean;
      else if (value == "max") cfg.aggregator = Aggregator::kMax;
      else throw std::invalid_argument("config: aggregator must be mean or max");
    }
    else if (key == "data_dir") cfg.data_dir = value;
    else if (key == "checkpoint_out") cfg.checkpoint_out = value;
    else if (key == "loss_csv_out") cfg.loss_csv_out = value;
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  if (cfg.loss_csv_out.empty() && !cfg.checkpoint_out.empty()) {
    cfg.loss_csv_out = cfg.checkpoint_out + ".loss.csv";
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config_text(ss.str());
}

}  // namespace xdiff::cli
