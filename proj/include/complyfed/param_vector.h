#ifndef COMPLYFED_PARAM_VECTOR_H_
#define COMPLYFED_PARAM_VECTOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace complyfed {

struct TensorShape {
  std::string name;
  std::vector<std::size_t> dims;

  std::size_t size() const;
  bool operator==(const TensorShape &) const = default;
};

using Layout = std::vector<TensorShape>;

std::size_t layout_size(const Layout &layout);

// Flat parameter buffer plus the tensor layout it encodes. This is the unit
// exchanged between clients and the server. Arithmetic between two vectors
// requires identical layouts and throws kLayoutMismatch otherwise.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(Layout layout);  // zero-filled
  ParamVector(Layout layout, std::vector<double> values);

  const Layout &layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double &operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // Values of one named tensor.
  std::span<double> tensor(std::string_view name);
  std::span<const double> tensor(std::string_view name) const;

  bool same_layout(const ParamVector &other) const { return layout_ == other.layout_; }
  void check_layout(const ParamVector &other) const;

  ParamVector &operator+=(const ParamVector &other);
  ParamVector &operator-=(const ParamVector &other);
  ParamVector &operator*=(double factor);

  // this += factor * other
  ParamVector &add_scaled(const ParamVector &other, double factor);

  void fill(double value);
  double l2_norm() const;

  bool operator==(const ParamVector &) const = default;

 private:
  Layout layout_;
  std::vector<double> values_;
};

ParamVector operator+(ParamVector lhs, const ParamVector &rhs);
ParamVector operator-(ParamVector lhs, const ParamVector &rhs);
ParamVector operator*(ParamVector lhs, double factor);
ParamVector operator*(double factor, ParamVector rhs);

double l2_distance(const ParamVector &a, const ParamVector &b);

}  // namespace complyfed

#endif  // COMPLYFED_PARAM_VECTOR_H_
