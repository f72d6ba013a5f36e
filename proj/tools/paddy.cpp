#include "paddy/cli.hpp"

int main(int argc, char** argv) { return paddy::cli::run(argc, argv); }
