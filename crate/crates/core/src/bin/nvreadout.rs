// Copyright 2026 The nvreadout Authors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(nvreadout::cli::run(std::env::args_os()));
}
