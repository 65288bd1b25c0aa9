#ifndef NHRCH_CLI_HPP
#define NHRCH_CLI_HPP

namespace nhrch::cli {

// Exit codes: 0 when every verdict passes, 1 on a failed verification, 2 on a config error.
int run_cli(int argc, char** argv);

}  // namespace nhrch::cli

#endif
