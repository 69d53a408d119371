#include <iostream>
#include <string>
#include <vector>

#include "cimsim/cli.hpp"

int main(int argc, char** argv)
{
    const std::vector<std::string> args(argv + 1, argv + argc);
    return cimsim::run_cli(args, std::cout, std::cerr);
}
