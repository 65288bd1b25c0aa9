#include "nhrch/cli.hpp"

int main(int argc, char** argv) { return nhrch::cli::run_cli(argc, argv); }
