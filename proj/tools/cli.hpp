#pragma once

namespace ncsub::cli {

// Runs one subcommand; returns the process exit code (0 ok, 1 usage, 2 data, 3 numerical).
auto run(int argc, char const *const *argv) -> int;

} // namespace ncsub::cli
