#pragma once

#include <string>

#include "fapc/config.hpp"

namespace fapc {

// Frozen CSV header for steering/semilinear experiment rows.
extern const char* const kReportHeader;

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitPartial = 2;  // some rows did not converge

struct RunOutput {
  int exit_code = kExitFailure;
  std::string csv;      // byte-stable for a fixed config and seed
  std::string report;   // human-readable; may carry timings, not byte-stable
  std::string failure;  // first failing check name, empty on success
};

// Invariant suite on the configured Gramian: symmetry, positive
// semidefiniteness, contraction, factorization agreement, coercivity bound,
// vanishing sweep. Emits one CSV row per check under the shared header.
RunOutput run_verify(const RunConfig& config);

// One report row per regularization level of the linear steering instance.
RunOutput run_steer(const RunConfig& config);

// Fixed-point study rows per regularization level; convergence traces go to
// the report text. Exit is partial when any instance fails to converge.
RunOutput run_semilinear(const RunConfig& config, int threads = 1);

// Vanishing-norm table of the configured Gramian over the epsilon grid.
RunOutput run_sweep(const RunConfig& config);

}  // namespace fapc
