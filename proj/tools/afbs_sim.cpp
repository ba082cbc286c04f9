#include "afbs/cli.hpp"

int main(int argc, char** argv) { return afbs::cli::main(argc, argv); }
