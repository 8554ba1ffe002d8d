#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bregman_perceptron/tensor.hpp"

namespace bregman {

enum class IdxErrorKind { Io, MissingFile, BadMagic, Truncated, DimensionOverflow };

class IdxError : public std::runtime_error {
 public:
  IdxError(IdxErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  IdxErrorKind kind() const noexcept { return kind_; }

 private:
  IdxErrorKind kind_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, file order
};

/// Reads an IDX3 image file. Paths ending in ".gz" are gunzipped on the fly.
IdxImages load_idx_images(const std::filesystem::path& path);
/// Reads an IDX1 label file.
std::vector<int> load_idx_labels(const std::filesystem::path& path);

void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels);

/// One row per image, pixel / 255.
DenseMatrix normalize_pixels(const IdxImages& images);

/// Throws std::out_of_range for a label outside [0, n_classes).
DenseMatrix one_hot(std::span<const int> labels, std::size_t n_classes);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

struct LabeledDataset {
  DenseMatrix X;  // s x m
  DenseMatrix Y;  // s x n, one-hot
  std::vector<int> labels;
  std::size_t n_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t input_dim() const noexcept { return X.cols(); }
};

/// Builds a dataset with one-hot targets; validates shapes and labels.
LabeledDataset make_dataset(DenseMatrix X, std::vector<int> labels, std::size_t n_classes);

/// `count` samples drawn without replacement with a seeded generator.
LabeledDataset subsample(const LabeledDataset& data, std::size_t count, std::uint64_t seed);

/// Class-template data: each class gets a seeded template in [0,1]^m; samples
/// are their template plus uniform noise in [-noise, noise], clipped to [0,1].
/// Labels are balanced (i mod n_classes) and the rows are shuffled.
LabeledDataset synthetic_dataset(std::size_t s, std::size_t m, std::size_t n_classes, std::uint64_t seed,
                                 double noise = 0.05);

/// File names looked up by load_idx_directory, in train/test image/label order.
std::vector<std::string> expected_idx_filenames();

struct TrainTestSplit {
  LabeledDataset train;
  LabeledDataset test;
};

/// Loads the four Fashion-MNIST style files from `dir`, accepting either the
/// bare name or the name with ".gz". Throws IdxError(MissingFile) listing the
/// expected names when any file is absent.
TrainTestSplit load_idx_directory(const std::filesystem::path& dir, std::size_t n_classes = 10);

}  // namespace bregman
