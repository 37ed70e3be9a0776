#include "mcms/studio.hpp"

#include <iostream>

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mcms::studio::run_cli(args, std::cin, std::cout, std::cerr);
}
