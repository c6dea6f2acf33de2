#include "forest/cli.hpp"

int main(int argc, char** argv) { return forest::cli_main(argc, argv); }
