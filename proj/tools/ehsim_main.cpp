#include "ehsim/cli.hpp"

int main(int argc, char** argv) { return ehsim::cli::run_main(argc, argv); }
