#include "kinexch/cli.hpp"

int main(int argc, char** argv) { return kinexch::cli::parse_and_dispatch(argc, argv); }
