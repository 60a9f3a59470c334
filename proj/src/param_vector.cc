#include "complyfed/param_vector.h"

#include <cmath>
#include <functional>
#include <numeric>

#include "complyfed/error.h"

namespace complyfed {

std::size_t TensorShape::size() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

std::size_t layout_size(const Layout &layout) {
  std::size_t total = 0;
  for (const auto &shape : layout) total += shape.size();
  return total;
}

ParamVector::ParamVector(Layout layout)
    : layout_(std::move(layout)), values_(layout_size(layout_), 0.0) {}

ParamVector::ParamVector(Layout layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (values_.size() != layout_size(layout_)) {
    throw Error(ErrorCode::kLayoutMismatch,
                "value count " + std::to_string(values_.size()) +
                    " does not match layout size " +
                    std::to_string(layout_size(layout_)));
  }
}

std::span<double> ParamVector::tensor(std::string_view name) {
  std::size_t offset = 0;
  for (const auto &shape : layout_) {
    if (shape.name == name) return std::span<double>(values_).subspan(offset, shape.size());
    offset += shape.size();
  }
  throw Error(ErrorCode::kLayoutMismatch, "no tensor named '" + std::string(name) + "'");
}

std::span<const double> ParamVector::tensor(std::string_view name) const {
  return const_cast<ParamVector *>(this)->tensor(name);
}

void ParamVector::check_layout(const ParamVector &other) const {
  if (!same_layout(other)) {
    throw Error(ErrorCode::kLayoutMismatch, "parameter layouts differ");
  }
}

ParamVector &ParamVector::operator+=(const ParamVector &other) {
  return add_scaled(other, 1.0);
}

ParamVector &ParamVector::operator-=(const ParamVector &other) {
  check_layout(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

ParamVector &ParamVector::operator*=(double factor) {
  for (double &v : values_) v *= factor;
  return *this;
}

ParamVector &ParamVector::add_scaled(const ParamVector &other, double factor) {
  check_layout(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += factor * other.values_[i];
  return *this;
}

void ParamVector::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

double ParamVector::l2_norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

ParamVector operator+(ParamVector lhs, const ParamVector &rhs) { return lhs += rhs; }
ParamVector operator-(ParamVector lhs, const ParamVector &rhs) { return lhs -= rhs; }
ParamVector operator*(ParamVector lhs, double factor) { return lhs *= factor; }
ParamVector operator*(double factor, ParamVector rhs) { return rhs *= factor; }

double l2_distance(const ParamVector &a, const ParamVector &b) {
  a.check_layout(b);
  double sum = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace complyfed
