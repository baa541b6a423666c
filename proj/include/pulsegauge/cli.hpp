#pragma once

#include <iosfwd>

namespace pulsegauge::cli {

// Entry point for every command. Exit codes: 0 success, 1 runtime error
// (JSON object on `err`), 2 usage error (message and usage text on `err`).
// Machine-readable output goes to `out` only; `in` backs "--in -".
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace pulsegauge::cli
