#include <iostream>
#include <string>
#include <vector>

#include "spanie/cli.h"

int main(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return spanie::RunCli(args, std::cout, std::cerr);
}
