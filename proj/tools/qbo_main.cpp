#include <iostream>

#include "qbo/cli.hpp"

int main(int argc, char** argv) { return qbo::cli::run_cli(argc, argv, std::cout, std::cerr); }
