#include <iostream>
#include <string>
#include <vector>

#include "shufflecast/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return shufflecast::run_cli(args, std::cout, std::cerr);
}
