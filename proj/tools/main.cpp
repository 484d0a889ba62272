#include "ma3d/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ma3d::run_cli(argc, argv, std::cout, std::cerr); }
