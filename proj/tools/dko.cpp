#include "dko/cli.hpp"

int main(int argc, char** argv) { return dko::cli_main(argc, argv); }
