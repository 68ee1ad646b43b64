#include "postpi/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return postpi::run_cli(argc, argv, std::cout, std::cerr);
}
