#include "hct/mda.hpp"

#include <algorithm>

#include "json.hpp"

namespace hct {

std::vector<int64_t> strides_of(const Shape& s) {
  std::vector<int64_t> st(s.order(), 1);
  for (size_t i = s.order(); i-- > 1;) st[i - 1] = st[i] * s.dims[i];
  return st;
}

int64_t flat_index(const Shape& s, std::span<const int64_t> coords) {
  int64_t f = 0;
  for (size_t i = 0; i < s.order(); ++i) f = f * s.dims[i] + coords[i];
  return f;
}

void unflatten(const Shape& s, int64_t flat, std::vector<int64_t>& coords) {
  coords.resize(s.order());
  for (size_t i = s.order(); i-- > 0;) {
    coords[i] = flat % s.dims[i];
    flat /= s.dims[i];
  }
}

static void check_shape(const Shape& s) {
  for (int64_t d : s.dims) {
    if (d < 1) throw shape_error("shape dims must be >= 1");
  }
}

Mda Mda::dense(Shape shape, std::vector<double> values) {
  check_shape(shape);
  if (static_cast<int64_t>(values.size()) != shape.volume()) {
    throw shape_error("dense: expected " + std::to_string(shape.volume()) + " values, got " +
                      std::to_string(values.size()));
  }
  Mda m;
  m.shape_ = std::move(shape);
  m.values_ = std::move(values);
  m.offsets_.resize(m.volume() + 1);
  for (int64_t i = 0; i <= m.volume(); ++i) m.offsets_[i] = i;
  return m;
}

Mda Mda::fill(Shape shape, double value) {
  check_shape(shape);
  return dense(shape, std::vector<double>(static_cast<size_t>(shape.volume()), value));
}

Mda Mda::jagged(Shape shape, const std::vector<bool>& mask, std::vector<double> values) {
  check_shape(shape);
  if (static_cast<int64_t>(mask.size()) != shape.volume()) {
    throw shape_error("jagged: mask size must equal grid volume");
  }
  size_t present = 0;
  for (bool b : mask) present += b ? 1 : 0;
  if (present != values.size()) {
    throw shape_error("jagged: expected " + std::to_string(present) + " present values, got " +
                      std::to_string(values.size()));
  }
  Mda m;
  m.shape_ = std::move(shape);
  m.values_ = std::move(values);
  m.offsets_.resize(m.volume() + 1);
  int64_t off = 0;
  for (int64_t i = 0; i < m.volume(); ++i) {
    m.offsets_[i] = off;
    if (mask[i]) ++off;
  }
  m.offsets_[m.volume()] = off;
  return m;
}

Mda::Builder::Builder(Shape shape) {
  check_shape(shape);
  m_.shape_ = std::move(shape);
  m_.offsets_.reserve(m_.volume() + 1);
  m_.offsets_.push_back(0);
}

void Mda::Builder::push_cell(std::span<const double> payload) {
  if (filled_ >= m_.volume()) throw shape_error("builder: too many cells");
  m_.values_.insert(m_.values_.end(), payload.begin(), payload.end());
  m_.offsets_.push_back(static_cast<int64_t>(m_.values_.size()));
  ++filled_;
}

Mda Mda::Builder::build() {
  if (filled_ != m_.volume()) throw shape_error("builder: grid not fully specified");
  return std::move(m_);
}

double Mda::scalar(int64_t pos) const {
  if (cell_size(pos) != 1) throw shape_error("scalar: position is absent or hyper");
  return values_[offsets_[pos]];
}

bool Mda::is_dense() const {
  for (int64_t i = 0; i < volume(); ++i) {
    if (!present(i)) return false;
  }
  return true;
}

bool Mda::is_hyper() const {
  for (int64_t i = 0; i < volume(); ++i) {
    if (cell_size(i) > 1) return true;
  }
  return false;
}

size_t Mda::regularity() const {
  size_t alpha = 0;
  for (int64_t i = 0; i < volume(); ++i) {
    if (!present(i)) continue;
    if (alpha == 0) {
      alpha = cell_size(i);
    } else if (cell_size(i) != alpha) {
      return 0;
    }
  }
  return alpha;
}

int64_t Mda::num_present() const {
  int64_t n = 0;
  for (int64_t i = 0; i < volume(); ++i) n += present(i) ? 1 : 0;
  return n;
}

int64_t Mda::mode_length(size_t mode) const {
  int64_t lo = -1, hi = -1;
  std::vector<int64_t> c;
  for (int64_t i = 0; i < volume(); ++i) {
    if (!present(i)) continue;
    unflatten(shape_, i, c);
    if (lo < 0 || c[mode] < lo) lo = c[mode];
    if (c[mode] > hi) hi = c[mode];
  }
  return lo < 0 ? 0 : hi - lo + 1;
}

int64_t Mda::mode_min(size_t mode) const {
  int64_t lo = -1;
  std::vector<int64_t> c;
  for (int64_t i = 0; i < volume(); ++i) {
    if (!present(i)) continue;
    unflatten(shape_, i, c);
    if (lo < 0 || c[mode] < lo) lo = c[mode];
  }
  return lo < 0 ? 0 : lo;
}

std::string Mda::to_json() const {
  if (is_hyper()) throw shape_error("hyper arrays have no file form");
  nlohmann::json j;
  j["shape"] = shape_.dims;
  if (is_dense()) {
    j["mask"] = "dense";
  } else {
    std::string mask(static_cast<size_t>(volume()), '0');
    for (int64_t i = 0; i < volume(); ++i) mask[static_cast<size_t>(i)] = present(i) ? '1' : '0';
    j["mask"] = mask;
  }
  j["data"] = values_;
  return j.dump();
}

Mda Mda::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Shape shape;
  for (const auto& d : j.at("shape")) shape.dims.push_back(d.get<int64_t>());
  std::vector<double> data;
  for (const auto& v : j.at("data")) data.push_back(v.get<double>());
  const auto& mask = j.at("mask");
  if (mask.is_string() && mask.get<std::string>() == "dense") {
    return dense(std::move(shape), std::move(data));
  }
  std::string bits = mask.get<std::string>();
  if (static_cast<int64_t>(bits.size()) != shape.volume()) {
    throw shape_error("mask bitstring length must equal grid volume");
  }
  std::vector<bool> m(bits.size());
  for (size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') throw shape_error("mask must be 0/1");
    m[i] = bits[i] == '1';
  }
  return jagged(std::move(shape), m, std::move(data));
}

SliceSpace::SliceSpace(const Mda& base, std::vector<size_t> inner_modes)
    : base_(&base), inner_modes_(std::move(inner_modes)) {
  std::sort(inner_modes_.begin(), inner_modes_.end());
  for (size_t m : inner_modes_) {
    if (m >= base.shape().order()) throw shape_error("slice_space: unknown mode");
  }
  if (std::adjacent_find(inner_modes_.begin(), inner_modes_.end()) != inner_modes_.end()) {
    throw shape_error("slice_space: duplicate mode");
  }
  for (size_t m = 0; m < base.shape().order(); ++m) {
    if (!std::binary_search(inner_modes_.begin(), inner_modes_.end(), m)) {
      outer_modes_.push_back(m);
      outer_.dims.push_back(base.shape().dims[m]);
    }
  }
  for (size_t m : inner_modes_) inner_.dims.push_back(base.shape().dims[m]);
}

Mda SliceSpace::slice(std::span<const int64_t> outer_coords) const {
  Mda::Builder b(inner_);
  std::vector<int64_t> full(base_->shape().order());
  for (size_t i = 0; i < outer_modes_.size(); ++i) full[outer_modes_[i]] = outer_coords[i];
  std::vector<int64_t> ic;
  for (int64_t f = 0; f < inner_.volume(); ++f) {
    unflatten(inner_, f, ic);
    for (size_t i = 0; i < inner_modes_.size(); ++i) full[inner_modes_[i]] = ic[i];
    b.push_cell(base_->cell(flat_index(base_->shape(), full)));
  }
  return b.build();
}

Mda SliceSpace::reassemble() const {
  Mda::Builder b(base_->shape());
  std::vector<int64_t> c;
  std::vector<int64_t> oc(outer_modes_.size()), ic(inner_modes_.size());
  // Materialize all slices once, then read entries back in base order.
  std::vector<Mda> slices;
  slices.reserve(static_cast<size_t>(outer_.volume()));
  std::vector<int64_t> ocoords;
  for (int64_t f = 0; f < outer_.volume(); ++f) {
    unflatten(outer_, f, ocoords);
    slices.push_back(slice(ocoords));
  }
  for (int64_t f = 0; f < base_->volume(); ++f) {
    unflatten(base_->shape(), f, c);
    for (size_t i = 0; i < outer_modes_.size(); ++i) oc[i] = c[outer_modes_[i]];
    for (size_t i = 0; i < inner_modes_.size(); ++i) ic[i] = c[inner_modes_[i]];
    const Mda& s = slices[static_cast<size_t>(flat_index(outer_, oc))];
    b.push_cell(s.cell(flat_index(inner_, ic)));
  }
  return b.build();
}

SliceSpace slice_space(const Mda& t, const std::vector<size_t>& inner_modes) {
  return SliceSpace(t, inner_modes);
}

Mda broadcast(const Mda& t, const Shape& target, const std::vector<size_t>& mode_map) {
  if (mode_map.size() != t.shape().order()) throw shape_error("broadcast: mode_map arity mismatch");
  std::vector<bool> used(target.order(), false);
  for (size_t i = 0; i < mode_map.size(); ++i) {
    size_t m = mode_map[i];
    if (m >= target.order() || used[m]) throw shape_error("broadcast: mode_map must inject");
    if (target.dims[m] != t.shape().dims[i]) throw shape_error("broadcast: dim mismatch");
    used[m] = true;
  }
  Mda::Builder b(target);
  std::vector<int64_t> tc, sc(t.shape().order());
  for (int64_t f = 0; f < target.volume(); ++f) {
    unflatten(target, f, tc);
    for (size_t i = 0; i < mode_map.size(); ++i) sc[i] = tc[mode_map[i]];
    b.push_cell(t.cell(flat_index(t.shape(), sc)));
  }
  return b.build();
}

Mda reduce(const Mda& t, const std::vector<size_t>& modes, double (*op)(double, double)) {
  if (t.is_hyper()) throw shape_error("reduce: operand must not be hyper");
  if (modes.empty()) return t;
  SliceSpace ss(t, modes);
  Mda::Builder b(ss.outer_shape());
  std::vector<int64_t> oc;
  for (int64_t f = 0; f < ss.outer_shape().volume(); ++f) {
    unflatten(ss.outer_shape(), f, oc);
    Mda s = ss.slice(oc);
    bool any = false;
    double acc = 0;
    for (int64_t i = 0; i < s.volume(); ++i) {
      if (!s.present(i)) continue;
      acc = any ? op(acc, s.scalar(i)) : s.scalar(i);
      any = true;
    }
    if (any) {
      b.push_cell(std::span<const double>(&acc, 1));
    } else {
      b.push_absent();
    }
  }
  return b.build();
}

}  // namespace hct
