#include "cwnoise/cli.hpp"

int main(int argc, char** argv) { return cwnoise::cli::main(argc, argv); }
