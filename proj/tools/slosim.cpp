#include <iostream>

#include "slosim/cli.hpp"

int main(int argc, char** argv) { return slosim::run_cli(argc, argv, std::cout, std::cerr); }
