// Copyright 2026 The limbpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "limbpose/cli.hpp"

int main(int argc, char** argv) { return limbpose::run_cli(argc, argv); }
