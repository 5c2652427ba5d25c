#include "funscreen/cli.hpp"

int main(int argc, char** argv) { return funscreen::run_cli(argc, argv); }
