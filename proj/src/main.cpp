#include "cli.hpp"

int main(int argc, char** argv) { return sepdict::cli::run(argc, argv); }
