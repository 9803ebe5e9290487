#include <iostream>

#include "strokeml/cli.hpp"

int main(int argc, char** argv) { return strokeml::cli::run(argc, argv, std::cout, std::cerr); }
