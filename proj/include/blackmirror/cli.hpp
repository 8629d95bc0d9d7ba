// Copyright (C) 2026 The BlackMirror Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace blackmirror::cli {

/// Exit codes are a stable contract.
inline constexpr int kExitBenign = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitAborted = 3;
inline constexpr int kExitFlagged = 10;
inline constexpr int kExitIncomplete = 20;

/// Runs one command line (without the program name). Exactly one JSON
/// document goes to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Unique id of the form run-YYYYMMDDTHHMMSSZ-xxxxxxxx.
std::string new_run_id();

}  // namespace blackmirror::cli
