#include <iostream>
#include <string>
#include <vector>

#include "xtalk/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return xtalk::run_cli(args, std::cout, std::cerr);
}
