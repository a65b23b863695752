#include "aalab/cli.hpp"

int main(int argc, char** argv) { return aalab::cli::run_cli(argc, argv); }
