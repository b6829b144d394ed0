#pragma once

namespace convspect {

/// Runs one CLI invocation (argv[0] is the program name). Returns the
/// process exit code: 0 iff all outputs were written and validated.
int run_cli(int argc, const char* const* argv);

} // namespace convspect
