#include "commands.hpp"

int main(int argc, char** argv) { return pti::cli::run(argc, argv); }
