#include <iostream>

#include "isrm/cli_commands.hpp"

int main(int argc, char** argv) { return isrm::run_cli(argc, argv, std::cout, std::cerr); }
