#pragma once

namespace mhnt::cli {

/// Umbrella command line: synth, flows, train, eval, detect, evidence.
/// Returns the process exit code: 0 success, 1 runtime failure, 2 usage
/// error, 3 detect completed with at least one flagged flow.
int run(int argc, const char* const* argv);

}  // namespace mhnt::cli
