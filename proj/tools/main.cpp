#include "nncov/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return nncov::run_cli(argc, argv, std::cout, std::cerr);
}
