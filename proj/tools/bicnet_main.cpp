#include "bicnet/commands.hpp"

int main(int argc, char** argv) { return bicnet::cli::run(argc, argv); }
