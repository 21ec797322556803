#include <string>
#include <vector>

#include "loadsim/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return loadsim::app::run_cli(std::move(args));
}
