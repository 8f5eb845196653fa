#include <iostream>

#include "saup/cli.hpp"

int main(int argc, char** argv) { return saup::cli::run(argc, argv, std::cout, std::cerr); }
