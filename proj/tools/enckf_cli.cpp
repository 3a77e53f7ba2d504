#include <iostream>

#include "enckf/cli.hpp"

int main(int argc, char** argv) { return enckf::run_cli(argc, argv, std::cout, std::cerr); }
