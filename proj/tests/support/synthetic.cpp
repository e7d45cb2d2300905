#include "support/synthetic.hpp"

#include <cmath>

#include "mgmd/audio/wav.hpp"
#include "mgmd/core/array_io.hpp"
#include "mgmd/core/random.hpp"
#include "mgmd/data/manifest.hpp"

namespace mgmd::testing {

namespace {

Tensor planted_grid(const PlantedConfig& cfg, bool machine, Rng& rng) {
  Tensor grid({cfg.side, cfg.side});
  for (int64_t i = 0; i < grid.numel(); ++i) grid[i] = rng.uniform(0.0f, cfg.noise_level);
  if (machine) {
    for (int64_t r = cfg.patch_row; r < cfg.patch_row + cfg.patch_size; ++r) {
      for (int64_t c = cfg.patch_col; c < cfg.patch_col + cfg.patch_size; ++c) {
        grid.at(r, c) = cfg.patch_value;
      }
    }
  }
  return grid;
}

}  // namespace

PlantedDataset make_planted_dataset(const PlantedConfig& config) {
  PlantedDataset dataset;
  dataset.config = config;
  Rng rng(config.seed);
  auto add = [&](const std::string& id, bool machine) {
    dataset.source.add(id, planted_grid(config, machine, rng),
                       machine ? kClassMachine : kClassHuman);
  };
  for (int i = 0; i < config.n_train; ++i) {
    std::string id = "train_" + std::to_string(i);
    add(id, i % 2 == 0);
    dataset.train_ids.push_back(id);
  }
  for (int i = 0; i < config.n_val; ++i) {
    std::string id = "val_" + std::to_string(i);
    add(id, i % 2 == 0);
    dataset.val_ids.push_back(id);
  }
  return dataset;
}

double planted_pixel_oracle_accuracy(const PlantedDataset& dataset,
                                     const std::vector<std::string>& ids) {
  const PlantedConfig& cfg = dataset.config;
  float threshold = 0.5f * (cfg.noise_level + cfg.patch_value);
  int64_t correct = 0;
  for (const auto& id : ids) {
    Tensor grid = dataset.source.grid(id);
    double patch_mean = 0.0;
    for (int64_t r = cfg.patch_row; r < cfg.patch_row + cfg.patch_size; ++r) {
      for (int64_t c = cfg.patch_col; c < cfg.patch_col + cfg.patch_size; ++c) {
        patch_mean += grid.at(r, c);
      }
    }
    patch_mean /= static_cast<double>(cfg.patch_size * cfg.patch_size);
    int prediction = patch_mean > threshold ? kClassMachine : kClassHuman;
    if (prediction == dataset.source.label_of(id)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ids.size());
}

void write_synthetic_audio_tree(const std::filesystem::path& root, int per_class, double seconds,
                                int sample_rate, uint64_t seed) {
  Rng rng(seed);
  auto n = static_cast<size_t>(seconds * sample_rate);
  for (int cls = 0; cls < 2; ++cls) {
    bool machine = cls == 1;
    std::filesystem::path dir = root / (machine ? "machine" : "human");
    for (int i = 0; i < per_class; ++i) {
      std::vector<float> samples(n);
      for (auto& s : samples) s = rng.uniform(-0.05f, 0.05f);
      if (machine) {
        // Tone burst in the middle: a bright patch in the mel grid.
        double freq = 2000.0 + 200.0 * (i % 3);
        size_t start = n / 3, stop = 2 * n / 3;
        for (size_t j = start; j < stop; ++j) {
          samples[j] += 0.6f * static_cast<float>(
                                   std::sin(2.0 * 3.14159265358979 * freq * j / sample_rate));
        }
      }
      std::string stem = (machine ? "m" : "h") + std::to_string(i);
      write_wav(dir / (stem + ".wav"), samples, sample_rate);
      write_text_file(dir / (stem + ".txt"),
                      machine ? "synthetic generated verse " + std::to_string(i)
                              : "hand written homemade verse " + std::to_string(i));
    }
  }
}

}  // namespace mgmd::testing
