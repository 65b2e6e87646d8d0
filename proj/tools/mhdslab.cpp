#include <iostream>

#include "mhdslab/cli.hpp"

int main(int argc, char** argv) { return mhdslab::cli_main(argc, argv, std::cout, std::cerr); }
