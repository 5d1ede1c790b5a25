#include "sblab/cli.hpp"

int main(int argc, char** argv) { return sblab::run_cli(argc, argv); }
