#include <iostream>

#include "potts/cli.hpp"

int main(int argc, char** argv)
{
    return potts::cli::run(argc, argv, std::cout, std::cerr);
}
