#include "magrisk/cli.hpp"

int main(int argc, char** argv) { return magrisk::cli::runMain(argc, argv); }
