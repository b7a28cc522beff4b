#include <vector>

#include "mtl/cli.hpp"

int main(int argc, char** argv) {
  return mtl::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
