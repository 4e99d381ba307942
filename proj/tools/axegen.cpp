// Copyright (C) 2026 The axegen Authors
// SPDX-License-Identifier: Apache-2.0

#include "axegen/cli.hpp"

int main(int argc, char** argv) { return axe::run_cli(argc, argv); }
