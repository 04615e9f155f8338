#include "stratperm/cli.hpp"

int main(int argc, char** argv) { return stratperm::run_cli(argc, argv); }
