#include "multiphase/cli.hpp"

int main(int argc, char** argv) { return multiphase::run_cli(argc, argv); }
