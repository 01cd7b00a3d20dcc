#include "dg3pd/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return dg3pd::cli::run_cli(argc, argv, std::cout, std::cerr);
}
