#include "v2g/scenario_io.hpp"

int main(int argc, char** argv) { return v2g::run_cli(argc, argv); }
