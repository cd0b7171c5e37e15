#include "gpct/cli.hpp"

int main(int argc, char** argv) { return gpct::cli::cli_dispatch(argc, argv); }
