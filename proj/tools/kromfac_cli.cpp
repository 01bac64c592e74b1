#include <string>
#include <vector>

#include "kromfac/cli.hpp"

int main(int argc, char** argv) {
  return kromfac::run_command(std::vector<std::string>(argv + 1, argv + argc));
}
