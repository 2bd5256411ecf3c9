#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wkam/env.hpp"
#include "wkam/grid.hpp"

namespace wkam {

struct Tolerances {
  std::optional<double> tol_sub;  // subsolution and semigroup checks
  std::optional<double> eps_aubry; // fixed-point detection threshold
  double bisection = 1e-2;        // critical value bracket width
  double neighborhood_radius = 0.0; // 0 selects the default
  int seeds = 8;                  // library seeds per axis
  double d0 = 0.1;                // strictness distance to the mask
  double tau = 0.1;               // strict builder time window
  int terms = 6;                  // strict builder truncation M
  double delta = 0.05;            // sup-convolution parameter
  std::optional<double> epsilon;  // target for ||w_eps - w||
  double reg_s = 0.25;            // positive semigroup time
  double reg_t = 1.0 / 32;        // negative semigroup time
  double flow_dt = 1e-3;
  int pairs = 100;                // contraction pairs
};

// One run configuration. Text form is INI with the sections environment,
// hamiltonian, grid, ladder and tolerances; every key has a default.
struct Config {
  EnvSpec env;
  std::uint64_t realization = 0;
  std::string model = "Mechanical";
  std::map<std::string, double> model_params;
  double theta = 2.0; // speed-bound level for the kernel stencil
  GridSpec grid{1, 128, 1.0};
  double dt = 1.0 / 64;
  double t_max = 4.0;
  Tolerances tol;

  // Dyadic ladder dt * 2^k up to t_max.
  std::vector<double> ladder() const;
  void validate() const;
};

// Throws ConfigError carrying the 1-based line of the offending entry.
Config parse_config(const std::string &text);
// INI text, or the "config" object of a run manifest when the file is JSON.
Config load_config(const std::string &path);

nlohmann::json to_json(const Config &config);
Config config_from_json(const nlohmann::json &j);
// FNV-1a (64 bit) of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const Config &config);

} // namespace wkam
