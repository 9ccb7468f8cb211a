#include <iostream>

#include "rer/cli.hpp"

int main(int argc, char** argv) { return rer::cli::run(argc, argv, std::cout, std::cerr); }
