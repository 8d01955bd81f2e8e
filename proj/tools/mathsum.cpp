#include "mathsum/cli/app.hpp"

int main(int argc, char** argv) { return mathsum::cli::run(argc, argv); }
