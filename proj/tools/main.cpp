#include "convspect/cli.hpp"

int main(int argc, char** argv) { return convspect::run_cli(argc, argv); }
