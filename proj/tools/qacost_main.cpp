#include <iostream>

#include "qacost/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return qacost::cli_dispatch(args, std::cout, std::cerr);
}
