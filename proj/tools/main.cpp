#include "dynimg/cli.hpp"

int main(int argc, char** argv) { return dynimg::cli_main(argc, argv); }
