#pragma once

namespace pcv {

// Entry point of the pcv command line; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace pcv
