#include "mpnehari/cli.hpp"

int main(int argc, char** argv) { return mpnehari::run_cli(argc, argv); }
