// Copyright 2026 The condscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

int main(int argc, char** argv) { return condscope::cli::run(argc, argv); }
