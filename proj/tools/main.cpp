#include "cli.hpp"

auto main(int argc, char **argv) -> int { return ncsub::cli::run(argc, argv); }
