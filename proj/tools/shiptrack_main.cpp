#include "shiptrack/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return shiptrack::cli::run_cli(argc, argv, std::cout, std::cerr); }
