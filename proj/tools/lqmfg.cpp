#include "lqmfg/cli.hpp"

int main(int argc, char** argv) { return lqmfg::run_cli(argc, argv); }
