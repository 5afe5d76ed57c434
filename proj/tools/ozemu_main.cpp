#include <iostream>

#include "ozemu/harness.hpp"

int main(int argc, char** argv) { return ozemu::run_cli(argc, argv, std::cout, std::cerr); }
