#include "cli/run.hpp"

int main(int argc, char** argv) { return stripspec::cli::main_entry(argc, argv); }
