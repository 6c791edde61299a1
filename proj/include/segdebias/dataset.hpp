#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "segdebias/dataset_types.hpp"

namespace segdebias {

/// Parameters of the synthetic spurious-correlation benchmark: a
/// class-determined foreground shape composited onto a background texture,
/// where the background family matches the class with probability
/// `correlation` (realized by exact counting, not coin flips).
struct GeneratorParams {
  int n_samples = 1000;
  int image_size = 32;
  double correlation = 0.9;    // in [0.5, 1]
  double class_balance = 0.5;  // fraction of samples with class label 0
  double target_coverage = 0.25; // fraction of image area covered by the shape
  std::uint64_t seed = 0;
};

void validate(const GeneratorParams& params);

/// group_id = 2 * class_label + background_label.
constexpr int group_of(int class_label, int background_label) {
  return 2 * class_label + background_label;
}

struct GenerationResult {
  std::vector<Sample> samples;
  std::array<int, 4> group_counts{}; // indexed by group_id
};

/// Deterministic under seed: identical params give bit-identical datasets.
/// Pixels are quantized to the 8-bit grid so PNG round-trips are exact.
GenerationResult generate(const GeneratorParams& params);

struct SplitFractions {
  double train = 0.6;
  double val = 0.1;
  double test = 0.3;
};

struct SplitResult {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
};

/// Disjoint, exhaustive, group-stratified, seed-deterministic split.
SplitResult split(const std::vector<Sample>& samples, const SplitFractions& fractions,
                  std::uint64_t seed);

/// Re-composites the sample's foreground onto a freshly rendered background
/// texture of the requested family, with a seeded stripe phase. Composites
/// onto the opposite family serve as counterfactual probes during bias
/// induction.
ImageTensor textured_background_composite(const Sample& sample, int background_family,
                                          std::uint64_t seed);

/// Writes images/, masks/ and manifest.csv (columns image_path, mask_path,
/// class_label, group_id, split) under dir.
void write_dataset(const std::vector<Sample>& samples, const std::filesystem::path& dir);

/// Loads a manifest written by write_dataset (paths resolved relative to the
/// manifest location). A row with an empty mask_path yields a sample flagged
/// mask-less, usable only for the zero-shot baseline.
std::vector<Sample> load_manifest(const std::filesystem::path& manifest_csv);

} // namespace segdebias
