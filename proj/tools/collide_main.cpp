#include <iostream>

#include "collide/cli.hpp"

int main(int argc, char** argv) { return collide::cli::main_entry(argc, argv, std::cout, std::cerr); }
