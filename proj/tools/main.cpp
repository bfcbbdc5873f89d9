#include "rdsnet/cli.hpp"

int main(int argc, char** argv) { return rdsnet::run_cli(argc, argv); }
