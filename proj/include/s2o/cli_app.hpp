// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace s2o {

/// Full benchmark CLI (gen / run / sweep / heatmap). Returns the process
/// exit code: 0 ok, 1 run failure, 2 bad arguments.
int run_cli(int argc, const char* const* argv);

}  // namespace s2o
