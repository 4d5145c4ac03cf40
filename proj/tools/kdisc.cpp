#include <iostream>

#include "kdisc/cli.hpp"

int main(int argc, char** argv) { return kdisc::cli::run(argc, argv, std::cout, std::cerr); }
