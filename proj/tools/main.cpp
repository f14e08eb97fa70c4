#include "divsand/cli.hpp"

int main(int argc, char** argv) { return divsand::cli::main(argc, argv); }
