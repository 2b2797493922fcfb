#include <iostream>

#include "kubo/cli.hpp"

int main(int argc, char** argv) { return kubo::run_cli(argc, argv, std::cout, std::cerr); }
