#include <iostream>

#include "fog/fogctl/commands.hpp"

int main(int argc, char** argv) { return fog::cli::run(argc, argv, std::cout, std::cerr); }
