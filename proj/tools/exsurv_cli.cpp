#include <iostream>
#include <string>
#include <vector>

#include "exsurv/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return exsurv::cli::run(args, std::cout, std::cerr);
}
