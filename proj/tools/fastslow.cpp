#include <iostream>

#include "fastslow/cli.hpp"

int main(int argc, char** argv) { return fastslow::cli_main(argc, argv, std::cout, std::cerr); }
