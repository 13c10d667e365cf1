#include "bosebox/cli.hpp"

int main(int argc, char** argv) { return bosebox::cli::run(argc, argv); }
