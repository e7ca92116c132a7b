#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sgldreg/field.hpp"
#include "sgldreg/synthetic.hpp"
#include "sgldreg/training.hpp"

namespace sgldreg {

/// image + N(0, sigma^2) per voxel, clipped to [0, 1].
Volume corrupt_gaussian(const Volume& image, double sigma, std::uint64_t seed);

/// alpha * image_j + (1 - alpha) * image_i, elementwise.
Volume corrupt_mixed(const Volume& image_i, const Volume& image_j, double alpha);

struct PreprocessResult {
  Volume volume;
  /// Set when the input was constant; the output is then all zeros.
  bool degenerate = false;
};

/// Centre crop or symmetric zero pad to `target` (odd remainders go to the
/// end), then min-max normalisation to [0, 1].
PreprocessResult preprocess(const Volume& volume, const Extents& target);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Shuffled partition of [0, n). Validation and test sizes are rounded and
/// the training set takes the remainder.
Split split_indices(std::size_t n, std::uint64_t seed, double train_fraction = 0.56,
                    double validation_fraction = 0.30);

/// One line of a dataset manifest:
///   pair <id> <train|validation|test> <moving> <fixed> <moving_labels> <fixed_labels>
/// Paths are relative to the manifest's directory. Label files are volume
/// files with one binary component per label and may be "-" when absent.
struct DatasetEntry {
  std::string id;
  std::string split;
  std::filesystem::path moving;
  std::filesystem::path fixed;
  std::filesystem::path moving_labels;
  std::filesystem::path fixed_labels;
};

struct DatasetManifest {
  std::filesystem::path base;
  std::vector<DatasetEntry> entries;

  std::vector<DatasetEntry> in_split(const std::string& split) const;
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct LoadedPair {
  std::string id;
  ImagePair images;
  std::vector<LabelMask> moving_masks;
  std::vector<LabelMask> fixed_masks;
};

LoadedPair load_pair(const DatasetManifest& manifest, const DatasetEntry& entry);
std::vector<LoadedPair> load_split(const DatasetManifest& manifest, const std::string& split);
std::vector<ImagePair> images_of(const std::vector<LoadedPair>& pairs);

/// Stacks masks into a [labels, ...spatial] tensor and back.
Tensor stack_masks(const std::vector<LabelMask>& masks);
std::vector<LabelMask> unstack_masks(const Tensor& stacked);

/// Writes `count` generated pairs (seeds base.seed + i) with their masks and
/// a manifest.txt into `dir`, split 56/30/14 under `split_seed`.
DatasetManifest write_synthetic_dataset(const std::filesystem::path& dir, std::size_t count,
                                        const SyntheticSpec& base, std::uint64_t split_seed);

}  // namespace sgldreg
