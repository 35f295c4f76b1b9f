#include <string>
#include <vector>

#include "fdm/cli.hpp"

int main(int argc, char** argv) {
    return fdm::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
