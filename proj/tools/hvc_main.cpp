#include <iostream>

#include "hvc/cli.hpp"

int main(int argc, char** argv) { return hvc::run_cli(argc, argv, std::cout, std::cerr); }
