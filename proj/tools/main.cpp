#include "semicl/cli.hpp"

int main(int argc, char** argv) { return semicl::cli::main_entry(argc, argv); }
