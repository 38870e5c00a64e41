#include <iostream>
#include <string>

#include "support/fake_bridge.hpp"

int main() {
  std::string line;
  while (std::getline(std::cin, line)) std::cout << nl2vis::testing::fake_bridge_respond(line) << std::endl;
}
