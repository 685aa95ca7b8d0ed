#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hct/mda.hpp"

namespace hct {

// The scalar pair a tensor operation is evaluated with: tuples fold with the
// tuple op, contracted slices fold with the slice op.
struct BaseOps {
  std::string name;
  double (*tuple_op)(double, double);
  double (*slice_op)(double, double);
  bool distributive;  // tuple_op distributes over slice_op (claimed)
  bool associative;   // slice_op is associative (claimed)
};

// Known pairs: mul_add, add_add, add_min, max_plus.
const BaseOps& base_ops_by_name(const std::string& name);

// Samples random scalar triples and checks the claimed flags numerically
// within 1e-12; throws algebra_error when a claim fails.
void check_base_ops(const BaseOps& ops);

// Tensor operation matrix: alpha rows of operands against coupled-mode
// columns. A row's operand modes map to its filled columns left to right.
struct Tom {
  size_t arity = 0;
  size_t cols = 0;
  std::vector<std::vector<uint8_t>> incidence;  // arity x cols, 0/1
  std::vector<bool> contracted;                 // per column
  std::vector<Shape> operand_shapes;            // per row
  std::vector<std::string> names;               // optional row labels
  std::string base_ops = "mul_add";

  // filled column indices of a row, ascending
  std::vector<size_t> row_columns(size_t row) const;
  // rows filling a column
  std::vector<size_t> column_rows(size_t col) const;
  // mode position of `col` within `row`'s filled columns; -1 if unfilled
  int64_t mode_of(size_t row, size_t col) const;

  // non-contracted columns in column order; these are the output modes
  std::vector<size_t> output_columns() const;
  Shape output_shape() const;  // from declared operand shapes

  void validate_structure() const;  // matrix well-formedness

  std::string to_json() const;
  static Tom from_json(const std::string& text);

  bool operator==(const Tom&) const = default;
};

struct TomReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Shape-level validation against declared operand shapes.
TomReport validate_tom(const Tom& t);
// Value-level validation: row shapes must match the operands, and coupled
// modes must agree on tensor length (max-span for jagged operands).
TomReport validate_tom(const Tom& t, const std::vector<Mda>& operands);

struct HyperResult {
  Mda hyper;                          // grid over all columns, tuple-valued
  std::vector<size_t> contracted_modes;  // positions of contracted columns
};

// First evaluation step: broadcast the operands over the coupled grid and
// merge them into a hyper array. Independent of any base operations.
HyperResult build_hyper(const Tom& t, const std::vector<Mda>& operands);

// Full evaluation: tuples fold with the tuple op in row order, contracted
// modes fold with the slice op in row-major order. Streams over the grid
// without materializing the hyper array.
Mda evaluate(const Tom& t, const std::vector<Mda>& operands, const BaseOps& ops);

// Splits off the last operand: an (alpha-1)-ary operation whose intermediate
// feeds a binary one. Contractions on couplings touching the last operand are
// deferred to the binary stage. Requires alpha >= 3 and honest flags.
std::pair<Tom, Tom> decompose_arity(const Tom& t, const BaseOps& ops);

// Repeated decomposition down to binary operations. Operation i consumes the
// previous intermediate as its first operand and original operand i+1 as its
// second.
std::vector<Tom> decompose_to_binary(const Tom& t, const BaseOps& ops);

// Evaluates a decompose_to_binary chain on the original operand list.
Mda evaluate_chain(const std::vector<Tom>& chain, const std::vector<Mda>& operands,
                   const BaseOps& ops);

// Inverse of decomposition: feeds t1's output into operand `bind` of t2,
// producing one operation of arity t1.arity + t2.arity - 1.
Tom merge_ops(const Tom& t1, const Tom& t2, size_t bind, const BaseOps& ops);

struct TomComplexity {
  size_t arity;
  size_t order_complexity;
  size_t coupling_arity;
};

TomComplexity tom_complexity(const Tom& t);

}  // namespace hct
