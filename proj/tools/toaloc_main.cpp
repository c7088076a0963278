#include <iostream>
#include <string>
#include <vector>

#include "toaloc/cli.hpp"

int main(int argc, char** argv) {
  return toaloc::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
