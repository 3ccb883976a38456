#include "msod/cli.hpp"

int main(int argc, char** argv) { return msod::cli::run(argc, argv); }
