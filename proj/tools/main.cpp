#include <iostream>

#include "qff/cli.hpp"

int main(int argc, char** argv) { return qff::cli::main_entry(argc, argv, std::cout, std::cerr); }
