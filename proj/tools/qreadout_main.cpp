#include <iostream>
#include <string>
#include <vector>

#include "qreadout/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qreadout::cli::run(args, std::cout, std::cerr);
}
