#include "rkz/cli.hpp"

int main(int argc, char** argv) { return rkz::run_cli(argc, argv); }
