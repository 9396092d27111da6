#include "tomolab/experiments.hpp"

int main(int argc, char** argv) { return tomolab::run_cli(argc, argv); }
