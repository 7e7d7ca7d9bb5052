#include <iostream>

#include "tclf/cli.hpp"

int main(int argc, char** argv) {
  tclf::cli::tune_allocator();
  return tclf::cli::run(argc, argv, std::cout, std::cerr);
}
