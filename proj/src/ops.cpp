#include "hct/ops.hpp"

#include <algorithm>
#include <cmath>

#include "hct/error.hpp"
#include "hct/rng.hpp"
#include "json.hpp"

namespace hct {

namespace {

double op_mul(double a, double b) { return a * b; }
double op_add(double a, double b) { return a + b; }
double op_min(double a, double b) { return a < b ? a : b; }
double op_max(double a, double b) { return a > b ? a : b; }

const BaseOps kRegistry[] = {
    {"mul_add", op_mul, op_add, true, true},
    {"add_add", op_add, op_add, false, true},
    {"add_min", op_add, op_min, true, true},
    {"max_plus", op_max, op_add, false, true},
};

}  // namespace

const BaseOps& base_ops_by_name(const std::string& name) {
  for (const auto& b : kRegistry) {
    if (b.name == name) return b;
  }
  throw algebra_error("unknown base operation pair: " + name);
}

void check_base_ops(const BaseOps& ops) {
  Rng rng(0x5eedULL);
  for (int i = 0; i < 100; ++i) {
    double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), c = rng.uniform(-1, 1);
    if (ops.associative) {
      double l = ops.slice_op(ops.slice_op(a, b), c);
      double r = ops.slice_op(a, ops.slice_op(b, c));
      if (std::fabs(l - r) > 1e-12) {
        throw algebra_error(ops.name + ": slice op fails associativity spot check");
      }
    }
    if (ops.distributive) {
      double l1 = ops.tuple_op(a, ops.slice_op(b, c));
      double r1 = ops.slice_op(ops.tuple_op(a, b), ops.tuple_op(a, c));
      double l2 = ops.tuple_op(ops.slice_op(b, c), a);
      double r2 = ops.slice_op(ops.tuple_op(b, a), ops.tuple_op(c, a));
      if (std::fabs(l1 - r1) > 1e-12 || std::fabs(l2 - r2) > 1e-12) {
        throw algebra_error(ops.name + ": tuple op fails distributivity spot check");
      }
    }
  }
}

std::vector<size_t> Tom::row_columns(size_t row) const {
  std::vector<size_t> out;
  for (size_t c = 0; c < cols; ++c) {
    if (incidence[row][c]) out.push_back(c);
  }
  return out;
}

std::vector<size_t> Tom::column_rows(size_t col) const {
  std::vector<size_t> out;
  for (size_t r = 0; r < arity; ++r) {
    if (incidence[r][col]) out.push_back(r);
  }
  return out;
}

int64_t Tom::mode_of(size_t row, size_t col) const {
  if (!incidence[row][col]) return -1;
  int64_t mode = 0;
  for (size_t c = 0; c < col; ++c) mode += incidence[row][c] ? 1 : 0;
  return mode;
}

std::vector<size_t> Tom::output_columns() const {
  std::vector<size_t> out;
  for (size_t c = 0; c < cols; ++c) {
    if (!contracted[c]) out.push_back(c);
  }
  return out;
}

Shape Tom::output_shape() const {
  Shape s;
  for (size_t c : output_columns()) {
    size_t r = column_rows(c).front();
    s.dims.push_back(operand_shapes[r].dims[static_cast<size_t>(mode_of(r, c))]);
  }
  return s;
}

void Tom::validate_structure() const {
  if (arity < 1) throw structure_error("tom: arity must be >= 1");
  if (incidence.size() != arity) throw structure_error("tom: incidence row count mismatch");
  if (contracted.size() != cols) throw structure_error("tom: contracted flag count mismatch");
  if (operand_shapes.size() != arity) throw structure_error("tom: shape count mismatch");
  if (!names.empty() && names.size() != arity) throw structure_error("tom: name count mismatch");
  for (size_t r = 0; r < arity; ++r) {
    if (incidence[r].size() != cols) throw structure_error("tom: ragged incidence");
    size_t fill = 0;
    for (uint8_t b : incidence[r]) fill += b ? 1 : 0;
    if (fill == 0) throw structure_error("tom: row " + std::to_string(r) + " fills no column");
    if (fill != operand_shapes[r].order()) {
      throw structure_error("tom: row " + std::to_string(r) + " shape order " +
                            std::to_string(operand_shapes[r].order()) + " != filled columns " +
                            std::to_string(fill));
    }
  }
  for (size_t c = 0; c < cols; ++c) {
    if (column_rows(c).empty()) {
      throw structure_error("tom: column " + std::to_string(c) + " has no member");
    }
  }
  if (!names.empty()) {
    for (size_t i = 0; i < names.size(); ++i) {
      for (size_t j = i + 1; j < names.size(); ++j) {
        if (!names[i].empty() && names[i] == names[j]) {
          throw structure_error("tom: operand '" + names[i] + "' appears twice");
        }
      }
    }
  }
}

std::string Tom::to_json() const {
  nlohmann::json j;
  j["rows"] = arity;
  j["cols"] = cols;
  nlohmann::json inc = nlohmann::json::array();
  for (const auto& row : incidence) {
    nlohmann::json r = nlohmann::json::array();
    for (uint8_t b : row) r.push_back(b ? 1 : 0);
    inc.push_back(r);
  }
  j["incidence"] = inc;
  j["contracted"] = contracted;
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& s : operand_shapes) shapes.push_back(s.dims);
  j["shapes"] = shapes;
  j["base_ops"] = base_ops;
  if (!names.empty()) j["names"] = names;
  return j.dump();
}

Tom Tom::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Tom t;
  t.arity = j.at("rows").get<size_t>();
  t.cols = j.at("cols").get<size_t>();
  for (const auto& row : j.at("incidence")) {
    std::vector<uint8_t> r;
    for (const auto& b : row) r.push_back(b.get<int>() ? 1 : 0);
    t.incidence.push_back(std::move(r));
  }
  for (const auto& b : j.at("contracted")) t.contracted.push_back(b.get<bool>());
  for (const auto& s : j.at("shapes")) {
    Shape sh;
    for (const auto& d : s) sh.dims.push_back(d.get<int64_t>());
    t.operand_shapes.push_back(std::move(sh));
  }
  t.base_ops = j.value("base_ops", "mul_add");
  if (j.contains("names")) {
    for (const auto& n : j["names"]) t.names.push_back(n.get<std::string>());
  }
  t.validate_structure();
  return t;
}

namespace {

// Column lengths from declared (dense) shapes; checks equality per column.
std::vector<int64_t> column_lengths_declared(const Tom& t, TomReport* rep) {
  std::vector<int64_t> len(t.cols, -1);
  for (size_t c = 0; c < t.cols; ++c) {
    for (size_t r : t.column_rows(c)) {
      int64_t d = t.operand_shapes[r].dims[static_cast<size_t>(t.mode_of(r, c))];
      if (len[c] < 0) {
        len[c] = d;
      } else if (len[c] != d && rep) {
        rep->ok = false;
        rep->violations.push_back("column " + std::to_string(c) + ": coupled sizes " +
                                  std::to_string(len[c]) + " and " + std::to_string(d) +
                                  " differ");
      }
    }
  }
  return len;
}

// Column lengths from operand values (tensor lengths); checks equality.
std::vector<int64_t> column_lengths_runtime(const Tom& t, const std::vector<Mda>& operands,
                                            TomReport* rep) {
  std::vector<int64_t> len(t.cols, -1);
  for (size_t c = 0; c < t.cols; ++c) {
    for (size_t r : t.column_rows(c)) {
      int64_t d = operands[r].mode_length(static_cast<size_t>(t.mode_of(r, c)));
      if (len[c] < 0) {
        len[c] = d;
      } else if (len[c] != d && rep) {
        rep->ok = false;
        rep->violations.push_back("column " + std::to_string(c) + ": coupled tensor lengths " +
                                  std::to_string(len[c]) + " and " + std::to_string(d) +
                                  " differ");
      }
    }
  }
  return len;
}

}  // namespace

TomReport validate_tom(const Tom& t) {
  TomReport rep;
  try {
    t.validate_structure();
  } catch (const std::exception& e) {
    rep.ok = false;
    rep.violations.push_back(e.what());
    return rep;
  }
  column_lengths_declared(t, &rep);
  return rep;
}

TomReport validate_tom(const Tom& t, const std::vector<Mda>& operands) {
  TomReport rep;
  try {
    t.validate_structure();
  } catch (const std::exception& e) {
    rep.ok = false;
    rep.violations.push_back(e.what());
    return rep;
  }
  if (operands.size() != t.arity) {
    rep.ok = false;
    rep.violations.push_back("expected " + std::to_string(t.arity) + " operands, got " +
                             std::to_string(operands.size()));
    return rep;
  }
  for (size_t r = 0; r < t.arity; ++r) {
    if (operands[r].shape() != t.operand_shapes[r]) {
      rep.ok = false;
      rep.violations.push_back("operand " + std::to_string(r) + " shape mismatch");
    }
  }
  if (rep.ok) column_lengths_runtime(t, operands, &rep);
  return rep;
}

namespace {

// Precomputed pull machinery for streaming over the coupled grid.
struct GridPlan {
  std::vector<int64_t> col_len;        // length of each column
  std::vector<size_t> iter_cols;       // output columns first, contracted innermost
  size_t num_out = 0;                  // prefix of iter_cols that is non-contracted
  // per row: stride over each iterated column (0 when the row skips it), and
  // the base offset from jagged normalization
  std::vector<std::vector<int64_t>> stride;
  std::vector<int64_t> base;
};

GridPlan plan_grid(const Tom& t, const std::vector<Mda>& operands) {
  GridPlan plan;
  plan.col_len = column_lengths_runtime(t, operands, nullptr);
  for (size_t c = 0; c < t.cols; ++c) {
    if (!t.contracted[c]) plan.iter_cols.push_back(c);
  }
  plan.num_out = plan.iter_cols.size();
  for (size_t c = 0; c < t.cols; ++c) {
    if (t.contracted[c]) plan.iter_cols.push_back(c);
  }
  plan.stride.assign(t.arity, std::vector<int64_t>(plan.iter_cols.size(), 0));
  plan.base.assign(t.arity, 0);
  for (size_t r = 0; r < t.arity; ++r) {
    std::vector<int64_t> st = strides_of(operands[r].shape());
    for (size_t k = 0; k < plan.iter_cols.size(); ++k) {
      size_t c = plan.iter_cols[k];
      int64_t mode = t.mode_of(r, c);
      if (mode >= 0) {
        plan.stride[r][k] = st[static_cast<size_t>(mode)];
        plan.base[r] += operands[r].mode_min(static_cast<size_t>(mode)) *
                        st[static_cast<size_t>(mode)];
      }
    }
  }
  return plan;
}

}  // namespace

HyperResult build_hyper(const Tom& t, const std::vector<Mda>& operands) {
  TomReport rep = validate_tom(t, operands);
  if (!rep.ok) throw shape_error("build_hyper: " + rep.violations.front());
  GridPlan plan = plan_grid(t, operands);

  // grid in plain column order for the hyper array itself
  Shape grid;
  for (size_t c = 0; c < t.cols; ++c) grid.dims.push_back(plan.col_len[c]);
  HyperResult out;
  for (size_t c = 0; c < t.cols; ++c) {
    if (t.contracted[c]) out.contracted_modes.push_back(c);
  }
  // per row: grid-column stride into the operand (0 when unfilled) and the
  // jagged normalization offset
  std::vector<std::vector<int64_t>> stride(t.arity, std::vector<int64_t>(t.cols, 0));
  std::vector<int64_t> base(t.arity, 0);
  for (size_t r = 0; r < t.arity; ++r) {
    const std::vector<int64_t> st = strides_of(operands[r].shape());
    for (size_t c = 0; c < t.cols; ++c) {
      int64_t mode = t.mode_of(r, c);
      if (mode < 0) continue;
      stride[r][c] = st[static_cast<size_t>(mode)];
      base[r] += operands[r].mode_min(static_cast<size_t>(mode)) * stride[r][c];
    }
  }

  Mda::Builder b(grid);
  std::vector<int64_t> coords;
  std::vector<double> tuple;
  for (int64_t f = 0; f < grid.volume(); ++f) {
    unflatten(grid, f, coords);
    tuple.clear();
    for (size_t r = 0; r < t.arity; ++r) {
      int64_t idx = base[r];
      for (size_t c = 0; c < t.cols; ++c) idx += coords[c] * stride[r][c];
      auto cell = operands[r].cell(idx);
      tuple.insert(tuple.end(), cell.begin(), cell.end());
    }
    if (tuple.empty()) {
      b.push_absent();
    } else {
      b.push_cell(tuple);
    }
  }
  out.hyper = b.build();
  return out;
}

Mda evaluate(const Tom& t, const std::vector<Mda>& operands, const BaseOps& ops) {
  TomReport rep = validate_tom(t, operands);
  if (!rep.ok) throw shape_error("evaluate: " + rep.violations.front());
  GridPlan plan = plan_grid(t, operands);

  Shape out_shape;
  for (size_t k = 0; k < plan.num_out; ++k) out_shape.dims.push_back(plan.col_len[plan.iter_cols[k]]);
  Shape contr_shape;
  for (size_t k = plan.num_out; k < plan.iter_cols.size(); ++k) {
    contr_shape.dims.push_back(plan.col_len[plan.iter_cols[k]]);
  }

  Mda::Builder b(out_shape);
  std::vector<int64_t> oc, cc;
  std::vector<int64_t> flat(t.arity);
  for (int64_t of = 0; of < out_shape.volume(); ++of) {
    unflatten(out_shape, of, oc);
    double acc = 0;
    bool any = false;
    for (int64_t cf = 0; cf < contr_shape.volume(); ++cf) {
      unflatten(contr_shape, cf, cc);
      for (size_t r = 0; r < t.arity; ++r) {
        int64_t idx = plan.base[r];
        for (size_t k = 0; k < plan.num_out; ++k) idx += oc[k] * plan.stride[r][k];
        for (size_t k = 0; k < cc.size(); ++k) idx += cc[k] * plan.stride[r][plan.num_out + k];
        flat[r] = idx;
      }
      double tup = 0;
      bool tup_any = false;
      for (size_t r = 0; r < t.arity; ++r) {
        auto cell = operands[r].cell(flat[r]);
        for (double v : cell) {
          tup = tup_any ? ops.tuple_op(tup, v) : v;
          tup_any = true;
        }
      }
      if (!tup_any) continue;
      acc = any ? ops.slice_op(acc, tup) : tup;
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

std::pair<Tom, Tom> decompose_arity(const Tom& t, const BaseOps& ops) {
  if (t.arity < 3) throw algebra_error("decompose_arity: arity must be >= 3");
  if (!ops.distributive || !ops.associative) {
    throw algebra_error("decompose_arity: base operations do not distribute/associate");
  }
  check_base_ops(ops);
  t.validate_structure();

  const size_t last = t.arity - 1;
  std::vector<int64_t> col_len = column_lengths_declared(t, nullptr);

  // first factor: all operands but the last, on the columns they fill;
  // contractions on couplings that touch the last operand are deferred
  Tom head;
  head.base_ops = t.base_ops;
  std::vector<size_t> head_cols;
  for (size_t c = 0; c < t.cols; ++c) {
    bool used = false;
    for (size_t r = 0; r + 1 < t.arity; ++r) used = used || t.incidence[r][c];
    if (used) head_cols.push_back(c);
  }
  head.arity = t.arity - 1;
  head.cols = head_cols.size();
  head.incidence.assign(head.arity, std::vector<uint8_t>(head.cols, 0));
  for (size_t r = 0; r < head.arity; ++r) {
    for (size_t k = 0; k < head_cols.size(); ++k) head.incidence[r][k] = t.incidence[r][head_cols[k]];
    head.operand_shapes.push_back(t.operand_shapes[r]);
  }
  for (size_t k = 0; k < head_cols.size(); ++k) {
    size_t c = head_cols[k];
    head.contracted.push_back(t.contracted[c] && !t.incidence[last][c]);
  }
  // the intermediate needs at least one mode: defer one contraction to the
  // binary stage (sound, since the tuple op distributes over the slice op)
  if (std::find(head.contracted.begin(), head.contracted.end(), false) ==
      head.contracted.end()) {
    head.contracted[0] = false;
  }
  if (!t.names.empty()) {
    head.names.assign(t.names.begin(), t.names.end() - 1);
  }

  // columns the intermediate carries, in original column order
  std::vector<size_t> mid_cols;
  for (size_t k = 0; k < head_cols.size(); ++k) {
    if (!head.contracted[k]) mid_cols.push_back(head_cols[k]);
  }

  Tom tail;
  tail.base_ops = t.base_ops;
  tail.arity = 2;
  std::vector<size_t> tail_cols;
  {
    std::vector<uint8_t> in_tail(t.cols, 0);
    for (size_t c : mid_cols) in_tail[c] = 1;
    for (size_t c = 0; c < t.cols; ++c) {
      if (t.incidence[last][c]) in_tail[c] = 1;
    }
    for (size_t c = 0; c < t.cols; ++c) {
      if (in_tail[c]) tail_cols.push_back(c);
    }
  }
  tail.cols = tail_cols.size();
  tail.incidence.assign(2, std::vector<uint8_t>(tail.cols, 0));
  Shape mid_shape;
  for (size_t c : mid_cols) mid_shape.dims.push_back(col_len[c]);
  for (size_t k = 0; k < tail_cols.size(); ++k) {
    size_t c = tail_cols[k];
    bool in_mid = std::find(mid_cols.begin(), mid_cols.end(), c) != mid_cols.end();
    tail.incidence[0][k] = in_mid ? 1 : 0;
    tail.incidence[1][k] = t.incidence[last][c];
    tail.contracted.push_back(t.contracted[c]);
  }
  tail.operand_shapes.push_back(mid_shape);
  tail.operand_shapes.push_back(t.operand_shapes[last]);
  if (!t.names.empty()) {
    tail.names = {"", t.names[last]};
  }
  head.validate_structure();
  tail.validate_structure();
  return {head, tail};
}

std::vector<Tom> decompose_to_binary(const Tom& t, const BaseOps& ops) {
  if (t.arity == 2) return {t};
  if (t.arity < 2) throw algebra_error("decompose_to_binary: arity must be >= 2");
  std::vector<Tom> chain;
  Tom current = t;
  while (current.arity > 2) {
    auto [head, tail] = decompose_arity(current, ops);
    chain.push_back(tail);
    current = std::move(head);
  }
  chain.push_back(current);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

Mda evaluate_chain(const std::vector<Tom>& chain, const std::vector<Mda>& operands,
                   const BaseOps& ops) {
  if (chain.empty()) throw algebra_error("evaluate_chain: empty chain");
  Mda acc = evaluate(chain.front(), {operands[0], operands[1]}, ops);
  for (size_t i = 1; i < chain.size(); ++i) {
    acc = evaluate(chain[i], {acc, operands[i + 1]}, ops);
  }
  return acc;
}

Tom merge_ops(const Tom& t1, const Tom& t2, size_t bind, const BaseOps& ops) {
  if (!ops.distributive || !ops.associative) {
    throw algebra_error("merge_ops: base operations do not distribute/associate");
  }
  if (t1.base_ops != t2.base_ops) {
    throw algebra_error("merge_ops: operations use different base operation pairs");
  }
  check_base_ops(ops);
  t1.validate_structure();
  t2.validate_structure();
  if (bind >= t2.arity) throw structure_error("merge_ops: bind operand out of range");

  Shape out1 = t1.output_shape();
  if (out1 != t2.operand_shapes[bind]) {
    throw shape_error("merge_ops: first output does not match the bound operand's lengths");
  }
  if (!t1.names.empty() && !t2.names.empty()) {
    for (size_t r = 0; r < t2.arity; ++r) {
      if (r == bind) continue;
      for (const auto& n : t1.names) {
        if (!n.empty() && n == t2.names[r]) {
          throw structure_error("merge_ops: tensor '" + n + "' would appear twice");
        }
      }
    }
  }

  std::vector<size_t> out_cols1 = t1.output_columns();
  std::vector<size_t> bind_cols = t2.row_columns(bind);
  // merged columns: all of t1's, then t2's columns not owned by the bound row
  Tom m;
  m.base_ops = t1.base_ops;
  m.arity = t1.arity + t2.arity - 1;
  std::vector<int64_t> t2col_to_merged(t2.cols, -1);
  for (size_t k = 0; k < bind_cols.size(); ++k) {
    t2col_to_merged[bind_cols[k]] = static_cast<int64_t>(out_cols1[k]);
  }
  m.cols = t1.cols;
  std::vector<size_t> extra;
  for (size_t c = 0; c < t2.cols; ++c) {
    if (t2col_to_merged[c] < 0) {
      t2col_to_merged[c] = static_cast<int64_t>(m.cols++);
      extra.push_back(c);
    }
  }
  m.incidence.assign(m.arity, std::vector<uint8_t>(m.cols, 0));
  m.contracted.assign(m.cols, false);
  for (size_t c = 0; c < t1.cols; ++c) m.contracted[c] = t1.contracted[c];
  for (size_t c = 0; c < t2.cols; ++c) {
    if (t2.contracted[c]) m.contracted[static_cast<size_t>(t2col_to_merged[c])] = true;
  }
  for (size_t r = 0; r < t1.arity; ++r) {
    for (size_t c = 0; c < t1.cols; ++c) m.incidence[r][c] = t1.incidence[r][c];
    m.operand_shapes.push_back(t1.operand_shapes[r]);
  }
  size_t mr = t1.arity;
  for (size_t r = 0; r < t2.arity; ++r) {
    if (r == bind) continue;
    for (size_t c = 0; c < t2.cols; ++c) {
      if (t2.incidence[r][c]) m.incidence[mr][static_cast<size_t>(t2col_to_merged[c])] = 1;
    }
    m.operand_shapes.push_back(t2.operand_shapes[r]);
    ++mr;
  }
  if (!t1.names.empty() || !t2.names.empty()) {
    m.names.resize(m.arity);
    for (size_t r = 0; r < t1.arity; ++r) m.names[r] = t1.names.empty() ? "" : t1.names[r];
    size_t q = t1.arity;
    for (size_t r = 0; r < t2.arity; ++r) {
      if (r == bind) continue;
      m.names[q++] = t2.names.empty() ? "" : t2.names[r];
    }
  }
  m.validate_structure();
  return m;
}

TomComplexity tom_complexity(const Tom& t) {
  size_t ca = 0;
  for (size_t c = 0; c < t.cols; ++c) ca = std::max(ca, t.column_rows(c).size());
  return {t.arity, t.cols, ca};
}

}  // namespace hct
