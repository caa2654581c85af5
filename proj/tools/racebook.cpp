#include <iostream>

#include "racebook/cli.hpp"

int main(int argc, char** argv) { return racebook::cli_dispatch(argc, argv, std::cout, std::cerr); }
