#include <jigsketch/cli.hpp>

int main(int argc, char** argv) { return jigsketch::cli::run(argc, argv); }
