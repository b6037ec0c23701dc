#include "salience/cli.hpp"

int main(int argc, char** argv) { return salience::run_cli(argc, argv); }
