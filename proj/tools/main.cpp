// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "shadowgrid/cli.hpp"

int main(int argc, char** argv) { return shadowgrid::run_cli(argc, argv, std::cout, std::cerr); }
