#pragma once

namespace forest {

/// Full command-line entry point. Returns the process exit code: 0 on
/// success, 1 on usage or input errors, 2 on internal errors.
int cli_main(int argc, char** argv);

}  // namespace forest
