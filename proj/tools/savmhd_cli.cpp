/// @file savmhd_cli.cpp
/// @brief Command-line entry point; all behavior lives in savmhd/cli.hpp so
///        tests can drive the same code paths in-process.

#include <iostream>
#include <string>
#include <vector>

#include "savmhd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return savmhd::run_cli(std::move(args), std::cout, std::cerr);
}
