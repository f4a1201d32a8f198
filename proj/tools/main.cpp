#include <iostream>
#include <string>
#include <vector>

#include "mlbalance/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mlbalance::run_cli(args, std::cout, std::cerr);
}
