#include <iostream>
#include <string>
#include <vector>

#include "fgrnn/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return fgrnn::cli::run(args, std::cout, std::cerr);
}
