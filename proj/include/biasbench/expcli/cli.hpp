// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace biasbench::expcli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitTrialFailure = 2;

// Entry point of the `biasbench` tool. `args` excludes the program name.
// Failures print one JSON error record to `err`:
//   {"error": {"kind": "...", "message": "...", "verb": "..."}}
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace biasbench::expcli
