#include <string>
#include <vector>

#include "drwgeom/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return drwgeom::run_cli(args);
}
