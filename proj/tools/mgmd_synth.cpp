// mgmd-synth: generates a small labeled audio tree for smoke runs.
// `human/` clips are noise beds; `machine/` clips add a tone burst, which
// shows up as a bright time-frequency patch. Every clip gets a lyrics
// sidecar so the fusion path has pairs to work with.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mgmd/audio/wav.hpp"
#include "mgmd/core/array_io.hpp"
#include "mgmd/core/random.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"mgmd-synth: synthetic audio fixture generator"};
  std::string out_dir = "data/synthetic";
  int per_class = 24;
  double seconds = 2.0;
  int sample_rate = 16000;
  uint64_t seed = 5;
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--per-class", per_class, "clips per class");
  app.add_option("--seconds", seconds, "clip duration");
  app.add_option("--rate", sample_rate, "sample rate");
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  mgmd::Rng rng(seed);
  auto n = static_cast<size_t>(seconds * sample_rate);
  fs::path root(out_dir);
  for (int cls = 0; cls < 2; ++cls) {
    bool machine = cls == 1;
    fs::path dir = root / (machine ? "machine" : "human");
    for (int i = 0; i < per_class; ++i) {
      std::vector<float> samples(n);
      for (auto& s : samples) s = rng.uniform(-0.05f, 0.05f);
      if (machine) {
        double freq = 2000.0 + 200.0 * (i % 3);
        size_t start = n / 3, stop = 2 * n / 3;
        for (size_t j = start; j < stop; ++j) {
          samples[j] += 0.6f * static_cast<float>(
                                   std::sin(2.0 * 3.14159265358979 * freq * j / sample_rate));
        }
      }
      std::string stem = (machine ? "m" : "h") + std::to_string(i);
      mgmd::write_wav(dir / (stem + ".wav"), samples, sample_rate);
      mgmd::write_text_file(dir / (stem + ".txt"),
                            machine ? "synthetic generated verse " + std::to_string(i)
                                    : "hand written homemade verse " + std::to_string(i));
    }
  }
  std::cout << "wrote " << 2 * per_class << " clips under " << root.string() << "\n";
  return 0;
}
