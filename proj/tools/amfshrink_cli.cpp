#include <iostream>

#include "amfshrink/cli.hpp"

int main(int argc, char** argv) {
  return amfshrink::cli::run(argc, argv, std::cout, std::cerr);
}
