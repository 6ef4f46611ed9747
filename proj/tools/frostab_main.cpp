#include <vector>

#include "frostab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return frostab::cli::run(args);
}
