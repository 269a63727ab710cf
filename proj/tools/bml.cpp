#include <iostream>

#include "bmlandscape/cli.hpp"

int main(int argc, char** argv) { return bml::cli::run(argc, argv, std::cout, std::cerr); }
