#include <iostream>

#include "gldgcn/cli.hpp"

int main(int argc, char** argv) { return gldgcn::run_cli(argc, argv, std::cout, std::cerr); }
