#include "martonlab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return martonlab::cli::run(argc, argv, std::cout, std::cerr); }
