#ifndef COMPLYFED_DATASET_H_
#define COMPLYFED_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace complyfed {

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;

  bool operator==(const ImageShape &) const = default;
};

// Row-major feature matrix with one class label per row. Image data keeps
// its (height, width) so spatial transforms can be applied; then
// dim == height * width.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t dim, std::vector<double> features, std::vector<int> labels,
          std::optional<ImageShape> image_shape = std::nullopt);

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }
  bool empty() const { return labels_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features_).subspan(i * dim_, dim_);
  }
  std::span<double> mutable_row(std::size_t i) {
    return std::span<double>(features_).subspan(i * dim_, dim_);
  }
  int label(std::size_t i) const { return labels_[i]; }

  std::span<const double> features() const { return features_; }
  std::span<const int> labels() const { return labels_; }
  const std::optional<ImageShape> &image_shape() const { return image_shape_; }

  // Copies the given rows, in order.
  Dataset subset(std::span<const std::size_t> rows) const;

  // Largest label + 1 (0 for an empty dataset).
  int num_classes() const;

  bool operator==(const Dataset &) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
  std::optional<ImageShape> image_shape_;
};

// A batch is a small dataset.
using Batch = Dataset;

struct PartitionedData {
  std::vector<Dataset> client_shards;
  Dataset aggregator_shard;
  Dataset eval_shard;
};

struct DegradationConfig {
  double crop_low = 0.8;
  double crop_high = 1.0;
  double gaussian_sigma = 0.05;
  double contrast_factor = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

// Gaussian class clusters with identity covariance. Class means sit on
// seeded orthonormal directions with pairwise distance class_separation
// (falling back to random unit directions when classes > d). Features are
// then affinely rescaled to [0, 1] with a single global min/max; labels are
// balanced (row i has label i mod classes). image_shape, if given, must
// satisfy height * width == d.
Dataset synth_classification(std::size_t n, std::size_t d, int classes,
                             double class_separation, std::uint64_t seed,
                             std::optional<ImageShape> image_shape = std::nullopt);

// CSV with d feature columns followed by one integer label column. A first
// row that does not parse as numbers is treated as a header.
Dataset load_csv(const std::filesystem::path &path,
                 std::optional<ImageShape> image_shape = std::nullopt);
Dataset parse_csv(std::string_view text, std::optional<ImageShape> image_shape = std::nullopt);
void write_csv(const std::filesystem::path &path, const Dataset &data);
std::string to_csv(const Dataset &data);

// One global shuffle, then num_clients + 2 contiguous shards whose sizes
// differ by at most one. The last two shards become the aggregator and
// evaluation shards.
PartitionedData partition(const Dataset &data, std::size_t num_clients, std::uint64_t seed);

// Per image: random crop of fraction f in [crop_low, crop_high] at a uniform
// position, bilinear resize back, additive N(0, sigma^2) noise, contrast
// scaling around the image mean, clamp to [0, 1]. Labels are untouched.
Dataset degrade(const Dataset &data, const DegradationConfig &cfg);

// Corner-aligned bilinear resample of the window [top, top + crop_h - 1] x
// [left, left + crop_w - 1] (continuous pixel coordinates) onto an
// out_h x out_w grid.
std::vector<double> crop_resize(std::span<const double> image, ImageShape shape, double top,
                                double left, double crop_h, double crop_w);

}  // namespace complyfed

#endif  // COMPLYFED_DATASET_H_
