#include <iostream>
#include <string>
#include <vector>

#include "kamdnlw/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return kamdnlw::cli::run(args, std::cout, std::cerr);
}
