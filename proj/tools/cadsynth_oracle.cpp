// Standalone oracle detector: reads VOC ground truth and writes detections
// JSONL under the documented noise model.
#include <iostream>

#include <CLI11.hpp>

#include "cadsynth/cli.hpp"
#include "cadsynth/error.hpp"
#include "cadsynth/io.hpp"
#include "cadsynth/oracle_detector.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Ground-truth echo detector with optional drop/jitter noise", "cadsynth-oracle"};
  std::string gt, out;
  cadsynth::NoiseModel noise;
  std::uint64_t seed = 0;
  app.add_option("--gt", gt, "Dataset root or directory of VOC XML files")->required();
  app.add_option("--out", out, "Detections JSONL to write")->required();
  app.add_option("--drop-rate", noise.drop_rate, "Probability of dropping each box")->check(CLI::Range(0.0, 1.0));
  app.add_option("--jitter", noise.jitter, "Max per-coordinate shift in pixels")->check(CLI::NonNegativeNumber);
  app.add_option("--score", noise.score, "Score of every detection")->check(CLI::Range(0.0, 1.0));
  app.add_option("--seed", seed, "Noise seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), cadsynth::kExitUsage);
  }
  try {
    const auto dets = cadsynth::oracle_detections(cadsynth::load_ground_truth(gt), noise, seed);
    cadsynth::write_file(out, cadsynth::write_detections(dets));
  } catch (const cadsynth::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cadsynth::kExitData;
  }
  return cadsynth::kExitOk;
}
