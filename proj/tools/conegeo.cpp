#include <iostream>

#include "conegeo/cli.hpp"

int main(int argc, char** argv) { return conegeo::cli::run_cli(argc, argv, std::cout, std::cerr); }
