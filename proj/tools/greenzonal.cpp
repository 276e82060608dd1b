#include <iostream>

#include "greenzonal/cli.hpp"

int main(int argc, char** argv) { return greenzonal::run(argc, argv, std::cout, std::cerr); }
