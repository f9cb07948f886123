#include "discordnet/cli.hpp"

int main(int argc, char** argv) { return discordnet::cli::run(argc, argv); }
