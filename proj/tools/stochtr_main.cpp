#include "stochtr/cli.hpp"

int main(int argc, char** argv) { return stochtr::cli_main(argc, argv); }
