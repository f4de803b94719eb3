#include <string>
#include <vector>

#include "cfxcert/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cfxcert::cli_run(args);
}
