#include "jde/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return jde::run_cli(argc, argv, std::cout, std::cerr); }
