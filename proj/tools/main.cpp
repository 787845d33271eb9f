#include "pgm_cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return pgm::cli::run_cli(argc, argv, std::cout, std::cerr); }
