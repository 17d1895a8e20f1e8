#include <iostream>
#include <string>
#include <vector>

#include "wia/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return wia::run_cli(args, std::cout, std::cerr);
}
