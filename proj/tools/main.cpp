#include "cli.hpp"

int main(int argc, char** argv) { return mosco::cli::run(argc, argv); }
