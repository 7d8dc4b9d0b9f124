#include "cli.hpp"

int main(int argc, char** argv) { return pcv::run_cli(argc, argv); }
