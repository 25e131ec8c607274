#include <iostream>

#include "stsurv/cli.hpp"

int main(int argc, char** argv) {
    return stsurv::run_cli(argc, argv, std::cout, std::cerr);
}
