#include "qcost/cli.hpp"

int main(int argc, char** argv) { return qcost::cli::run(argc, argv); }
