#include "tlas/cli/commands.hpp"

int main(int argc, char** argv) { return tlas::cli::run_cli(argc, argv); }
