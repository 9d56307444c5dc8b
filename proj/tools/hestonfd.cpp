#include <iostream>
#include <string>
#include <vector>

#include "hestonfd/cli.hpp"

int main(int argc, char** argv) {
  return hestonfd::cli::main(std::vector<std::string>(argv, argv + argc), std::cerr);
}
