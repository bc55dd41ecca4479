#include <iostream>
#include <string>
#include <vector>

#include "smbo/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return smbo::run_cli(args, std::cout, std::cerr);
}
