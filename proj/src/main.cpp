#include <mse/cli.hpp>

int main(int argc, char** argv) { return mse::cli::main(argc, argv); }
