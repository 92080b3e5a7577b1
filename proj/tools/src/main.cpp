#include "xdiff_cli/commands.hpp"

int main(int argc, char** argv) { return xdiff::cli::run_cli(argc, argv); }
