#pragma once

#include <string>

#include "mgmd/cli/config.hpp"

namespace mgmd {

/// Standard run-directory layout. Directories are created on demand by
/// the commands that own them.
struct RunArtifacts {
  std::filesystem::path root;

  std::filesystem::path manifests() const { return root / "manifests"; }
  std::filesystem::path splits() const { return root / "splits"; }
  std::filesystem::path mel_cache() const { return root / "mel_cache"; }
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path metrics() const { return root / "metrics"; }
  std::filesystem::path roc() const { return root / "roc"; }
  std::filesystem::path heatmaps() const { return root / "heatmaps"; }
  std::filesystem::path overlays() const { return root / "overlays"; }
  std::filesystem::path fidelity() const { return root / "fidelity"; }
  std::filesystem::path report() const { return root / "report"; }
  std::filesystem::path logs() const { return root / "logs"; }
};

/// Dispatches one CLI command. Throws Error; the binary maps error codes
/// to exit statuses (config 2, missing artifact 3, runtime 4).
void run_command(const std::string& command, const ExperimentConfig& config);

}  // namespace mgmd
