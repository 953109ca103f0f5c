#include <iostream>

#include "lmrf/harness/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lmrf::harness::run_cli(args, std::cout, std::cerr);
}
