#include "unirec/cli.hpp"

int main(int argc, char** argv) { return unirec::run_cli(argc, argv); }
