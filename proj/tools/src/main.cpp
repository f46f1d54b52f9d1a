#include <iostream>

#include "bcle/cli.hpp"

int main(int argc, char** argv) {
  return bcle::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
