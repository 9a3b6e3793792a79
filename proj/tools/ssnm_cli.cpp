#include "ssnm/cli.hpp"

int main(int argc, char** argv) { return ssnm::cli::main_entry(argc, argv); }
