#include <iostream>

#include "polylearn/cli.hpp"

int main(int argc, char** argv) { return polylearn::run_cli(argc, argv, std::cout, std::cerr); }
