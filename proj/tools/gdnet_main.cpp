#include <iostream>

#include "gdnet/cli/commands.hpp"

int main(int argc, char** argv) { return gdnet::cli::run_cli(argc, argv, std::cout, std::cerr); }
