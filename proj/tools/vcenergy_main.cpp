#include <iostream>
#include <string>
#include <vector>

#include "vcenergy/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return vcenergy::cli::dispatch(args, std::cout, std::cerr);
}
