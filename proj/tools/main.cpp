#include <iostream>

#include "cli/cli.hpp"

int main(int argc, char** argv) { return tmt::cli::run_cli(argc, argv, std::cerr); }
