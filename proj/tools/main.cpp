#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return dyadiclab::cli_main(argc, argv, std::cout, std::cerr); }
