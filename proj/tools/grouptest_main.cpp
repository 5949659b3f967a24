#include <iostream>

#include "grouptest/cli.hpp"

int main(int argc, char** argv) {
    return grouptest::run_cli(argc, argv, std::cout, std::cerr);
}
