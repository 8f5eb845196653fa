#pragma once

#include <iosfwd>

namespace saup::cli {

enum ExitCode : int {
    kOk = 0,
    kDataError = 1,
    kUsageError = 2,
    kScorerError = 3,
};

/// Entry point for the `saup` tool. Subcommands: ingest, score, train-hmm,
/// eval, synth, scatter. Diagnostics go to `err`; summaries to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace saup::cli
