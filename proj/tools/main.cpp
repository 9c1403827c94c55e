#include "disagg/io.hpp"

int main(int argc, char** argv) { return disagg::io::run_cli(argc, argv); }
