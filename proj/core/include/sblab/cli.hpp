#pragma once

namespace sblab {

// Full command-line front end: pretrain, train, eval, sample, oracle-check,
// plot. Returns the process exit code: 0 ok, 2 config error, 3 numeric
// divergence, 4 I/O error.
int run_cli(int argc, char** argv);

} // namespace sblab
