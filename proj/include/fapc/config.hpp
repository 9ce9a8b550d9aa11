#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fapc/linops.hpp"

namespace fapc {

// Initial/target state: either explicit mode coefficients or a named preset
// ("zero", "mode-k", "gaussian-bump(c,w)", "random").
struct StateSpec {
  bool is_preset = true;
  std::string preset = "zero";
  std::vector<double> coeffs;
};

struct RunConfig {
  std::string scenario = "run";

  int n_modes = 0;
  double horizon = 0.0;

  std::string control_kind;  // "distributed" | "lumped"
  double control_lo = 0.0;
  double control_hi = 0.0;

  int m_modes = 0;
  std::string basis_file;  // optional explicit orthonormal basis (JSON)

  std::vector<double> epsilons;  // strictly decreasing, positive

  StateSpec y0;
  StateSpec yf;

  int steps = 1000;

  std::string f_name = "zero";
  std::string g_name = "zero";
  double bound = 0.0;
  double tol = 1e-8;
  int max_iter = 50;
  double relaxation = 1.0;

  std::string csv_path;
  std::string report_path;

  uint64_t seed = 0;

  std::string gramian_file;  // verification fixture override (JSON)
};

// Strict parse: unknown keys anywhere in the document are a hard error, as
// are out-of-range values. Throws ConfigError.
RunConfig parse_config(const std::string& text);

// Canonical JSON form; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const RunConfig& config);

bool operator==(const StateSpec& a, const StateSpec& b);
bool operator==(const RunConfig& a, const RunConfig& b);

// Resolves a state spec to mode coefficients. Presets that draw randomness
// mix the seed with the tag so y0 and yf streams differ.
Vector resolve_state(const StateSpec& spec, int n_modes, uint64_t seed, const std::string& tag);

// Reads {"basis": [[...], ...]} and validates orthonormality.
Subspace load_basis_file(const std::string& path, int n_modes);

// Reads {"matrix": [[...], ...]}; square, sizes checked against n_modes.
Matrix load_matrix_file(const std::string& path, int n_modes);

}  // namespace fapc
