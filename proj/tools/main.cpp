#include "ssqp/harness.hpp"

int main(int argc, char** argv) { return ssqp::cli_main(argc, argv); }
