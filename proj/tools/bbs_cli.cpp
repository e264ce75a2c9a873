#include "cli_app.hpp"

int main(int argc, char** argv) { return bbs::cli::run(argc, argv); }
