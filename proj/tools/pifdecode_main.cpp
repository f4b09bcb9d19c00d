// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include "pifdecode/cli.hpp"

int main(int argc, char** argv) { return pifdecode::cli::run(argc, argv); }
