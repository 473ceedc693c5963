// Writes the procedural demo asset set into a directory.
#include <iostream>

#include "cadsynth/cli.hpp"
#include "cadsynth/error.hpp"
#include "cadsynth/primitives.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: cadsynth-demo-assets <output-dir>\n";
    return cadsynth::kExitUsage;
  }
  try {
    std::cout << cadsynth::write_demo_assets(argv[1]).string() << "\n";
  } catch (const cadsynth::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cadsynth::kExitData;
  }
  return cadsynth::kExitOk;
}
