#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hct/error.hpp"

namespace hct {

struct Shape {
  std::vector<int64_t> dims;  // all >= 1; empty means order 0 (a scalar)

  size_t order() const { return dims.size(); }
  int64_t volume() const {
    int64_t v = 1;
    for (int64_t d : dims) v *= d;
    return v;
  }
  bool operator==(const Shape&) const = default;
};

// Row-major strides for a shape.
std::vector<int64_t> strides_of(const Shape& s);

int64_t flat_index(const Shape& s, std::span<const int64_t> coords);
void unflatten(const Shape& s, int64_t flat, std::vector<int64_t>& coords);

// Possibly jagged, possibly hyper multidimensional array. Each grid position
// holds a sequence of scalars: length 0 means the position is absent, length 1
// is an ordinary entry, length > 1 makes the array hyper.
class Mda {
 public:
  Mda() = default;

  static Mda dense(Shape shape, std::vector<double> values);
  static Mda fill(Shape shape, double value);
  // mask is row-major over the full grid; values are the present entries in
  // row-major order.
  static Mda jagged(Shape shape, const std::vector<bool>& mask, std::vector<double> values);

  // Incremental row-major construction (used for hyper results).
  class Builder;

  const Shape& shape() const { return shape_; }
  int64_t volume() const { return shape_.volume(); }

  bool present(int64_t pos) const { return offsets_[pos + 1] > offsets_[pos]; }
  std::span<const double> cell(int64_t pos) const {
    return {values_.data() + offsets_[pos], static_cast<size_t>(offsets_[pos + 1] - offsets_[pos])};
  }
  size_t cell_size(int64_t pos) const { return static_cast<size_t>(offsets_[pos + 1] - offsets_[pos]); }
  double scalar(int64_t pos) const;

  bool is_dense() const;
  bool is_hyper() const;
  // 0 when not alpha-regular for any alpha, else the common cell size.
  size_t regularity() const;

  int64_t num_present() const;

  // Tensor length of a mode: the coordinate span of present positions along
  // it (max - min + 1); 0 for an entirely absent array. Generalizes "dimension
  // size" to jagged arrays.
  int64_t mode_length(size_t mode) const;
  int64_t mode_min(size_t mode) const;

  const std::vector<double>& raw_values() const { return values_; }

  bool operator==(const Mda&) const = default;

  // File form: only non-hyper arrays round-trip through JSON.
  std::string to_json() const;
  static Mda from_json(const std::string& text);

 private:
  Shape shape_;
  std::vector<int64_t> offsets_;  // volume()+1 entries
  std::vector<double> values_;
};

class Mda::Builder {
 public:
  explicit Builder(Shape shape);
  // Appends the payload for the next position in row-major order.
  void push_cell(std::span<const double> payload);
  void push_absent() { push_cell({}); }
  Mda build();

 private:
  Mda m_;
  int64_t filled_ = 0;
};

// Higher-order view of a tensor induced by a binary mode partition: an outer
// multi-index selects an inner-shaped slice.
class SliceSpace {
 public:
  SliceSpace(const Mda& base, std::vector<size_t> inner_modes);

  const Shape& outer_shape() const { return outer_; }
  const Shape& inner_shape() const { return inner_; }
  const std::vector<size_t>& inner_modes() const { return inner_modes_; }
  const std::vector<size_t>& outer_modes() const { return outer_modes_; }

  // The slice at an outer position, materialized as an Mda over inner_shape.
  Mda slice(std::span<const int64_t> outer_coords) const;

  // Rebuilds the base array from its slices; identity by construction.
  Mda reassemble() const;

 private:
  const Mda* base_;
  std::vector<size_t> inner_modes_;
  std::vector<size_t> outer_modes_;
  Shape outer_;
  Shape inner_;
};

SliceSpace slice_space(const Mda& t, const std::vector<size_t>& inner_modes);

// Copies t along dummy modes: mode_map[i] gives the target mode carrying t's
// mode i; target positions pull back through it.
Mda broadcast(const Mda& t, const Shape& target, const std::vector<size_t>& mode_map);

// Folds op over the present entries of each inner slice along `modes`, in
// row-major order. Positions whose slice is entirely absent stay absent.
Mda reduce(const Mda& t, const std::vector<size_t>& modes, double (*op)(double, double));

}  // namespace hct
