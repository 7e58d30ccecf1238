#include <iostream>
#include <string>
#include <vector>

#include "hyperplateau_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hyperplateau::cli::run(args, std::cout, std::cerr);
}
