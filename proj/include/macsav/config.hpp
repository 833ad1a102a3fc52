#pragma once

// Run configuration: line-oriented `key = value` text, '#' starts a comment.
//
// Required: epsilon, nu, lambda, tau, n_cells, t_end
// Optional: init_case   default_smooth | equilibrium | random | from_snapshot:<path>
//           seed        unsigned integer (random init), default 0
//           output_dir  default "."
//           diag_every  steps between CSV rows, default 1
//           snapshot_every  steps between checkpoints, 0 disables (default)
//           startup     first_order_step (default) | copy_level

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "macsav/scheme.hpp"

namespace macsav {

enum class InitCase { default_smooth, equilibrium, random, from_snapshot };

struct RunConfig {
  double epsilon = 0.0;
  double nu = 0.0;
  double lambda = 0.0;
  double tau = 0.0;
  int n_cells = 0;
  double t_end = 0.0;

  InitCase init_case = InitCase::default_smooth;
  std::string snapshot_path;
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  long diag_every = 1;
  long snapshot_every = 0;
  Startup startup = Startup::first_order_step;

  // Not settable from the text format.
  double amplitude = 1.0;

  Params params() const { return {epsilon, nu, lambda, tau, n_cells, t_end}; }
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line) : std::runtime_error(what), line_(line) {}
  /// 1-based line of the offending entry, 0 when the error is not tied to a line.
  int line() const { return line_; }

 private:
  int line_;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace macsav
