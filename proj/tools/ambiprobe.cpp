#include <iostream>

#include "ambiprobe/cli.hpp"

int main(int argc, char** argv) {
  return ambiprobe::cli_dispatch(argc, argv, std::cout, std::cerr);
}
