#pragma once

#include <iosfwd>

#include "langstep/config.hpp"

namespace langstep {

// Exit codes shared by the library-level runner and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIoError = 1;
inline constexpr int kExitBlowUp = 2;
inline constexpr int kExitInconclusive = 3;

// Dispatches a validated config: writes the results file (CSV) plus a
// manifest next to it, logs progress to `log`. Never mutates inputs.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace langstep
