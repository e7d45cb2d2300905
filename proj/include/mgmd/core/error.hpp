#pragma once

#include <stdexcept>
#include <string>

namespace mgmd {

/// Error categories surfaced across the toolkit. The CLI maps these to
/// process exit codes (config -> 2, missing_artifact -> 3, rest -> 4).
enum class ErrorCode {
  decode_error,
  empty_audio,
  config_error,
  empty_dataset,
  ambiguous_label,
  too_few_samples,
  unknown_architecture,
  shape_error,
  nan_input,
  single_class,
  dimension_mismatch,
  length_mismatch,
  divergence,
  missing_feature_cache,
  provider_error,
  missing_lyrics,
  non_differentiable,
  unsupported_architecture,
  layer_not_found,
  degenerate_segmentation,
  empty_input,
  too_few_techniques,
  too_few_runs,
  missing_artifact,
  io_error,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::decode_error: return "DecodeError";
    case ErrorCode::empty_audio: return "EmptyAudio";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::empty_dataset: return "EmptyDataset";
    case ErrorCode::ambiguous_label: return "AmbiguousLabel";
    case ErrorCode::too_few_samples: return "TooFewSamples";
    case ErrorCode::unknown_architecture: return "UnknownArchitecture";
    case ErrorCode::shape_error: return "ShapeError";
    case ErrorCode::nan_input: return "NaNInput";
    case ErrorCode::single_class: return "SingleClass";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::divergence: return "DivergenceError";
    case ErrorCode::missing_feature_cache: return "MissingFeatureCache";
    case ErrorCode::provider_error: return "ProviderError";
    case ErrorCode::missing_lyrics: return "MissingLyrics";
    case ErrorCode::non_differentiable: return "NonDifferentiableModel";
    case ErrorCode::unsupported_architecture: return "UnsupportedArchitecture";
    case ErrorCode::layer_not_found: return "LayerNotFound";
    case ErrorCode::degenerate_segmentation: return "DegenerateSegmentation";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::too_few_techniques: return "TooFewTechniques";
    case ErrorCode::too_few_runs: return "TooFewRuns";
    case ErrorCode::missing_artifact: return "MissingArtifact";
    case ErrorCode::io_error: return "IoError";
  }
  return "Error";
}

}  // namespace mgmd
