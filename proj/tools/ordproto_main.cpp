#include <iostream>
#include <string>
#include <vector>

#include "ordproto/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ordproto::run_cli(args, std::cout, std::cerr);
}
