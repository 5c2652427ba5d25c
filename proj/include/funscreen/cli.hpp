#pragma once

namespace funscreen {

// Parses arguments, runs one subcommand (doe, screen, fit, predict or
// validate) and returns the process exit status. Successful runs leave all
// declared artifacts plus a checksummed manifest in the output directory;
// failures print a single line "error: <category>: <message>" on stderr,
// remove any partial outputs and return nonzero.
int run_cli(int argc, const char* const* argv);

}  // namespace funscreen
