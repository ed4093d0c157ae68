#include "quantenv/cli.hpp"

int main(int argc, char** argv) { return quantenv::cli::run(argc, argv); }
