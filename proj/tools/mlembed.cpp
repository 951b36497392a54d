#include <iostream>

#include "mlembed/cli.hpp"

int main(int argc, char** argv) { return mlembed::run_cli(argc, argv, std::cout, std::cerr); }
