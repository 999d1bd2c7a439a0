#include <iostream>

#include "namvp/cli.hpp"

int main(int argc, char** argv) { return namvp::cli_main(argc, argv, std::cout, std::cerr); }
