#include "fpi/config.hpp"

int main(int argc, char** argv) { return fpi::cli_main(argc, argv); }
