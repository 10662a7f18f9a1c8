#include <iostream>

#include <pdeabcd/cli.hpp>

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return pdeabcd::cli::run(args, std::cout, std::cerr);
}
