#include <iostream>
#include <string>
#include <vector>

#include "rowswap_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rowswap::cli::run(args, std::cout, std::cerr);
}
