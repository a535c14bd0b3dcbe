#include <string>
#include <vector>

#include "carto/pipeline.hpp"

int main(int argc, char** argv) {
    return carto::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
