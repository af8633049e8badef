#include <iostream>
#include <string>
#include <vector>

#include "plaway/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return plaway::cli::run_cli(args, std::cout, std::cerr);
}
