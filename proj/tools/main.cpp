#include "marior/cli.hpp"

int main(int argc, char** argv) { return marior::cli::run(argc, argv); }
