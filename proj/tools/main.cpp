#include <iostream>

#include "aggmark/cli/commands.hpp"

int main(int argc, char** argv) {
  return aggmark::cli::main_entry(argc, argv, std::cout, std::cerr);
}
