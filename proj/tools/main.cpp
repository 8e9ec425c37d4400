#include "cli.hpp"

int main(int argc, char** argv) { return opennav::cli::run(argc, argv); }
