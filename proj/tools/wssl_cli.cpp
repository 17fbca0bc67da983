// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0

#include "wssl/cli.hpp"

int main(int argc, char** argv) { return wssl::cli::run(argc, argv); }
