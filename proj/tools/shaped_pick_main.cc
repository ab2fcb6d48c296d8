#include "shaped_pick/cli.h"

int main(int argc, char** argv) { return shaped_pick::cli::main(argc, argv); }
