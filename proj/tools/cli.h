// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Command-line front end. Subcommands: simulate, train, eval, extract and
// gradcheck. Failures print one line "error: <code>: <message>" to stderr.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace avse::cli {

// Exit status for a failed library call; argument errors exit with kUsage.
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

// `args` excludes the program name.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace avse::cli
