#include "hypoflow/cli.hpp"

int main(int argc, char** argv) { return hypoflow::run_cli(argc, argv); }
