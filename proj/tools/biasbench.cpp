// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "biasbench/expcli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return biasbench::expcli::RunCli(args, std::cout, std::cerr);
}
