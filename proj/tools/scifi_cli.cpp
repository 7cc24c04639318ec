#include <iostream>

#include "scifi/cli_io.hpp"

int main(int argc, char** argv) {
    return scifi::io::run_cli(argc, argv, std::cout, std::cerr);
}
