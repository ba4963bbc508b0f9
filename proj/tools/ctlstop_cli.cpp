#include "cli_app.hpp"

int main(int argc, char** argv) { return ctlstop::cli::run(argc, argv); }
