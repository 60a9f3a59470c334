#include "complyfed/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "complyfed/error.h"
#include "complyfed/rng.h"
#include "io_util.h"

namespace complyfed {

Dataset::Dataset(std::size_t dim, std::vector<double> features, std::vector<int> labels,
                 std::optional<ImageShape> image_shape)
    : dim_(dim),
      features_(std::move(features)),
      labels_(std::move(labels)),
      image_shape_(image_shape) {
  if (features_.size() != dim_ * labels_.size()) {
    throw Error(ErrorCode::kBadDims, "feature matrix size does not equal rows x dim");
  }
  if (image_shape_ && image_shape_->height * image_shape_->width != dim_) {
    throw Error(ErrorCode::kBadDims, "image shape does not match feature dimension");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<double> features;
  features.reserve(rows.size() * dim_);
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (std::size_t r : rows) {
    auto src = row(r);
    features.insert(features.end(), src.begin(), src.end());
    labels.push_back(labels_[r]);
  }
  return Dataset(dim_, std::move(features), std::move(labels), image_shape_);
}

int Dataset::num_classes() const {
  if (labels_.empty()) return 0;
  return *std::max_element(labels_.begin(), labels_.end()) + 1;
}

void DegradationConfig::validate() const {
  if (!(crop_low > 0.0 && crop_low <= crop_high && crop_high <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "crop range must satisfy 0 < low <= high <= 1");
  }
  if (!(gaussian_sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gaussian_sigma must be >= 0");
  }
  if (!(contrast_factor > 0.0 && contrast_factor <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "contrast_factor must lie in (0, 1]");
  }
}

Dataset synth_classification(std::size_t n, std::size_t d, int classes, double class_separation,
                             std::uint64_t seed, std::optional<ImageShape> image_shape) {
  if (classes < 2 || d == 0 || n < static_cast<std::size_t>(classes)) {
    throw Error(ErrorCode::kBadDims, "need d >= 1, classes >= 2 and n >= classes");
  }
  if (image_shape && image_shape->height * image_shape->width != d) {
    throw Error(ErrorCode::kBadDims, "image shape does not match d");
  }
  const auto k = static_cast<std::size_t>(classes);
  Rng rng(derive_seed(seed, "synth-directions"));

  // Seeded Gaussian directions, orthonormalized when there is room.
  std::vector<std::vector<double>> directions(k, std::vector<double>(d));
  for (std::size_t c = 0; c < k; ++c) {
    auto &v = directions[c];
    for (double &x : v) x = rng.normal();
    if (k <= d) {
      for (std::size_t p = 0; p < c; ++p) {
        const double dot = std::inner_product(v.begin(), v.end(), directions[p].begin(), 0.0);
        for (std::size_t j = 0; j < d; ++j) v[j] -= dot * directions[p][j];
      }
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (double &x : v) x /= norm;
  }
  // Orthonormal means scaled by s / sqrt(2) are pairwise s apart.
  const double radius = class_separation / std::sqrt(2.0);

  Rng sample_rng(derive_seed(seed, "synth-samples"));
  std::vector<double> features(n * d);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % k;
    labels[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < d; ++j) {
      features[i * d + j] = radius * directions[c][j] + sample_rng.normal();
    }
  }
  const auto [lo, hi] = std::minmax_element(features.begin(), features.end());
  const double low = *lo;
  const double span = *hi - *lo;
  for (double &x : features) x = span > 0.0 ? (x - low) / span : 0.5;
  return Dataset(d, std::move(features), std::move(labels), image_shape);
}

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view cell, double &out) {
  cell = trim(cell);
  if (cell.empty()) return false;
  // from_chars rejects a leading '+'; accept it like other CSV readers do.
  if (cell.front() == '+') cell.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

bool parse_label(std::string_view cell, int &out) {
  cell = trim(cell);
  if (cell.empty()) return false;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size() && out >= 0;
}

std::string cell_ref(std::size_t line, std::size_t column) {
  return "row " + std::to_string(line) + ", column " + std::to_string(column);
}

}  // namespace

Dataset parse_csv(std::string_view text, std::optional<ImageShape> image_shape) {
  std::vector<double> features;
  std::vector<int> labels;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  bool first_content_line = true;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto cells = split_csv_line(line);
    if (first_content_line) {
      first_content_line = false;
      double probe = 0.0;
      if (!parse_number(cells.front(), probe)) continue;  // header row
    }
    if (cells.size() < 2) {
      throw Error(ErrorCode::kParseError,
                  "row " + std::to_string(line_no) + ": need at least one feature and a label");
    }
    if (dim == 0) {
      dim = cells.size() - 1;
    } else if (cells.size() - 1 != dim) {
      throw Error(ErrorCode::kParseError, "row " + std::to_string(line_no) + ": expected " +
                                              std::to_string(dim + 1) + " columns, found " +
                                              std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < dim; ++c) {
      double value = 0.0;
      if (!parse_number(cells[c], value)) {
        throw Error(ErrorCode::kParseError, cell_ref(line_no, c + 1) + ": '" +
                                                std::string(trim(cells[c])) + "' is not a number");
      }
      if (!std::isfinite(value)) {
        throw Error(ErrorCode::kNonFiniteFeature, cell_ref(line_no, c + 1));
      }
      features.push_back(value);
    }
    int label = 0;
    if (!parse_label(cells[dim], label)) {
      throw Error(ErrorCode::kParseError, cell_ref(line_no, dim + 1) + ": '" +
                                              std::string(trim(cells[dim])) +
                                              "' is not a class index");
    }
    labels.push_back(label);
    if (end == text.size()) break;
  }
  if (labels.empty()) throw Error(ErrorCode::kEmptyFile, "CSV contains no data rows");
  return Dataset(dim, std::move(features), std::move(labels), image_shape);
}

Dataset load_csv(const std::filesystem::path &path, std::optional<ImageShape> image_shape) {
  return parse_csv(internal::read_file(path), image_shape);
}

std::string to_csv(const Dataset &data) {
  std::string out;
  for (std::size_t j = 0; j < data.dim(); ++j) out += "f" + std::to_string(j) + ",";
  out += "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.row(i)) out += internal::format_double(v) + ",";
    out += std::to_string(data.label(i)) + "\n";
  }
  return out;
}

void write_csv(const std::filesystem::path &path, const Dataset &data) {
  internal::write_file(path, to_csv(data));
}

PartitionedData partition(const Dataset &data, std::size_t num_clients, std::uint64_t seed) {
  const std::size_t shards = num_clients + 2;
  if (num_clients == 0 || data.size() < shards) {
    throw Error(ErrorCode::kTooFewSamples, std::to_string(data.size()) +
                                               " samples cannot fill " + std::to_string(shards) +
                                               " shards");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "partition"));
  rng.shuffle(std::span<std::size_t>(order));

  const std::size_t base = data.size() / shards;
  const std::size_t extra = data.size() % shards;
  std::vector<Dataset> pieces;
  std::size_t start = 0;
  for (std::size_t s = 0; s < shards; ++s) {
    const std::size_t len = base + (s < extra ? 1 : 0);
    pieces.push_back(data.subset(std::span<const std::size_t>(order).subspan(start, len)));
    start += len;
  }
  PartitionedData out;
  out.eval_shard = std::move(pieces.back());
  pieces.pop_back();
  out.aggregator_shard = std::move(pieces.back());
  pieces.pop_back();
  out.client_shards = std::move(pieces);
  return out;
}

std::vector<double> crop_resize(std::span<const double> image, ImageShape shape, double top,
                                double left, double crop_h, double crop_w) {
  const std::size_t h = shape.height;
  const std::size_t w = shape.width;
  auto at = [&](std::size_t y, std::size_t x) { return image[y * w + x]; };
  // Output pixel i maps to top + i * (crop_h - 1) / (h - 1), so corners land
  // on corners and a full-size window reproduces the input exactly.
  const double step_y = h > 1 ? (crop_h - 1.0) / static_cast<double>(h - 1) : 0.0;
  const double step_x = w > 1 ? (crop_w - 1.0) / static_cast<double>(w - 1) : 0.0;
  std::vector<double> out(h * w);
  for (std::size_t i = 0; i < h; ++i) {
    const double sy = std::clamp(top + static_cast<double>(i) * step_y, 0.0,
                                 static_cast<double>(h - 1));
    const auto y0 = static_cast<std::size_t>(std::floor(sy));
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t j = 0; j < w; ++j) {
      const double sx = std::clamp(left + static_cast<double>(j) * step_x, 0.0,
                                   static_cast<double>(w - 1));
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - static_cast<double>(x0);
      const double upper = at(y0, x0) + fx * (at(y0, x1) - at(y0, x0));
      const double lower = at(y1, x0) + fx * (at(y1, x1) - at(y1, x0));
      out[i * w + j] = upper + fy * (lower - upper);
    }
  }
  return out;
}

Dataset degrade(const Dataset &data, const DegradationConfig &cfg) {
  cfg.validate();
  if (!data.image_shape()) {
    throw Error(ErrorCode::kNotImageData, "degradation needs image-shaped data");
  }
  const ImageShape shape = *data.image_shape();
  const auto h = static_cast<double>(shape.height);
  const auto w = static_cast<double>(shape.width);
  Dataset out = data;
  Rng rng(derive_seed(cfg.seed, "degrade"));
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto pixels = out.mutable_row(i);
    const double f = rng.uniform(cfg.crop_low, cfg.crop_high);
    const double crop_h = std::max(1.0, f * h);
    const double crop_w = std::max(1.0, f * w);
    const double top = rng.uniform() * (h - crop_h);
    const double left = rng.uniform() * (w - crop_w);
    std::vector<double> image = crop_resize(pixels, shape, top, left, crop_h, crop_w);
    if (cfg.gaussian_sigma > 0.0) {
      for (double &p : image) p += cfg.gaussian_sigma * rng.normal();
    }
    const double mean =
        std::accumulate(image.begin(), image.end(), 0.0) / static_cast<double>(image.size());
    for (std::size_t j = 0; j < image.size(); ++j) {
      pixels[j] = std::clamp(mean + cfg.contrast_factor * (image[j] - mean), 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace complyfed
