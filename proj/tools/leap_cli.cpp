// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "leap/commands.hpp"

int main(int argc, char** argv) { return leap::cli::run_cli(argc, argv, std::cout, std::cerr); }
