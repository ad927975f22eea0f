#include "entdyn/harness.hpp"

#include <iostream>

int main(int argc, char** argv) { return entdyn::run_cli(argc, argv, std::cout, std::cerr); }
