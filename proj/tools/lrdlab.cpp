#include "lrdlab/cli.hpp"

int main(int argc, char** argv) { return lrdlab::cli::run(argc, argv); }
