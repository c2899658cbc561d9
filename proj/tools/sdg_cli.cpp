#include <iostream>
#include <string>
#include <vector>

#include "sdg/harness.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sdg::run_command(args, std::cout, std::cerr);
}
