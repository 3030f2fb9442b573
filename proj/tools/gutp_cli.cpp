#include "gutp/cli.hpp"

int main(int argc, char** argv) { return gutp::cli::dispatch(argc, argv); }
