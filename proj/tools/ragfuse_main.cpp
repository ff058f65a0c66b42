#include <iostream>

#include "ragfuse/cli.hpp"

int main(int argc, char** argv) {
    return ragfuse::run_cli(argc, argv, std::cout, std::cerr);
}
