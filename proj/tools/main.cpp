#include "synthstab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return synthstab::run_cli(argc, argv, std::cout, std::cerr); }
