#include "mfcf/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return mfcf::cli::run(argc, argv, std::cout, std::cerr);
}
