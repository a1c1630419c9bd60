#include "ncqsm/cli.hpp"

int main(int argc, char** argv) { return ncqsm::cli::run(argc, argv); }
