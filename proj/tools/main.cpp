#include "trialsize/commands.hpp"

int main(int argc, char** argv) { return trialsize::cli_main(argc, argv); }
