#include "dfsos/cli.hpp"

int main(int argc, char** argv) { return dfsos::run_cli(argc, argv); }
