#include "cgra/cli.hpp"

int main(int argc, char** argv) { return cgra::cli_main(argc, argv); }
