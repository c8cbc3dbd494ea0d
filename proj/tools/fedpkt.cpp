#include <iostream>

#include "fedpkt/cli.hpp"

int main(int argc, char** argv) { return fedpkt::run_cli(argc, argv, std::cout, std::cerr); }
