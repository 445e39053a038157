#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv)
{
    return oltsm::cli::Run({ argv + 1, argv + argc }, std::cout, std::cerr);
}
