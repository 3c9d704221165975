#include "semiconvex/harness/cli.hpp"

int main(int argc, char** argv) { return semiconvex::run_cli(argc, argv); }
