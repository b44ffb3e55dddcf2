#include "emif/cli.hpp"

int main(int argc, char** argv) { return emif::cli::run(argc, argv); }
