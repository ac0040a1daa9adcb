#include <iostream>

#include "mpj/cli/commands.hpp"

int main(int argc, char** argv) { return mpj::cli::main_entry(argc, argv, std::cout, std::cerr); }
