#include <iostream>

#include "dagfm/cli/commands.hpp"

int main(int argc, char** argv) { return dagfm::run_command(argc, argv, std::cout, std::cerr); }
