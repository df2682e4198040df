#include <iostream>
#include <string>
#include <vector>

#include "apiward/cli/commands.h"

int main(int argc, char** argv) {
  return apiward::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
