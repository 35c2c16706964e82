#include <iostream>

#include "cain/commands.hpp"

int main(int argc, char** argv) { return cain::cli::run(argc, argv, std::cout, std::cerr); }
