#include "spiquad/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return spiquad::run_cli(argc, argv, std::cout, std::cerr);
}
