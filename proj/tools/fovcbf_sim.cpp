#include "fovcbf/cli.hpp"

int main(int argc, char** argv) { return fovcbf::run_cli(argc, argv); }
