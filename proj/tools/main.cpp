#include <iostream>
#include <string>
#include <vector>

#include "picardkit/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return picardkit::run_cli(args, std::cout, std::cerr);
}
