#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hct/mda.hpp"
#include "hct/modemap.hpp"
#include "hct/ops.hpp"

namespace hct {

struct TensorDecl {
  std::string name;
  std::string role;  // input | weight | intermediate | output
  Shape shape;
  bool batch = false;  // leading mode is a batch mode, ignored by order complexity
};

struct OpRow {
  Tom tom;
  std::vector<std::string> inputs;  // operand tensor names, one per TOM row
  std::string output;
};

struct ActRow {
  std::string fn;  // leaky_relu | relu6 | layer_norm | softmax
  std::vector<size_t> axes;
  double eps = 1e-5;
  double slope = 0.01;
  std::vector<double> gamma, beta;  // layer_norm affine over the axes grid; optional
  std::string input;
  std::string output;
};

struct MapRow {
  ModeMap map;
  std::string input;
  std::string output;  // packaging tensor: same base set rearranged
};

struct Row {
  std::variant<OpRow, ActRow, MapRow> body;

  bool is_op() const { return std::holds_alternative<OpRow>(body); }
  bool is_act() const { return std::holds_alternative<ActRow>(body); }
  bool is_map() const { return std::holds_alternative<MapRow>(body); }
  const OpRow& op() const { return std::get<OpRow>(body); }
  const ActRow& act() const { return std::get<ActRow>(body); }
  const MapRow& map() const { return std::get<MapRow>(body); }
};

// A network block: tensors against the operations, activations and mode maps
// that connect them.
struct Architecture {
  std::string name;
  std::vector<TensorDecl> tensors;
  std::vector<Row> rows;

  const TensorDecl* find_tensor(const std::string& n) const;

  std::string to_json() const;
  static Architecture from_json(const std::string& text);
};

struct TemReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Acyclicity, single producer per tensor, and shape closure through every row.
TemReport validate_tem(const Architecture& a);

// Total size of the weight-role tensors.
int64_t parameter_count(const Architecture& a);

// Deterministic weight bindings: uniform on [-1/sqrt(fan), 1/sqrt(fan)] where
// fan is the product of the contracted column lengths the weight's modes fill
// in its first consuming operation.
std::map<std::string, Mda> seeded_weights(const Architecture& a, uint64_t seed);

// Topological-order evaluation. Missing weight bindings error; use
// seeded_weights to fill them first. Returns the output-role tensors.
std::map<std::string, Mda> forward(const Architecture& a,
                                   const std::map<std::string, Mda>& inputs,
                                   const std::map<std::string, Mda>& weights);

// All intermediate values too, keyed by tensor name.
std::map<std::string, Mda> forward_trace(const Architecture& a,
                                         const std::map<std::string, Mda>& inputs,
                                         const std::map<std::string, Mda>& weights);

struct ComplexitySignature {
  int64_t c_op = 0;
  int64_t c_t = 0;
  int64_t c_alpha = 0;
  int64_t c_o = 0;
  int64_t c_a = 0;
  bool operator==(const ComplexitySignature&) const = default;
};

// The five block-level complexity measures. Activation rows count toward
// c_op only when asked; mode-map packaging tensors never count toward c_t,
// and a single-operation block degenerates to the bare operation, whose
// result tensor is not part of the cell.
ComplexitySignature signature(const Architecture& a, bool count_activations = false);

// Replaces an operation row by its binary decomposition chain; forward
// results are unchanged for distributive base operations.
Architecture expand_row_to_binary(const Architecture& a, size_t row_index);

// Activation library, exposed for direct use.
Mda act_leaky_relu(const Mda& x, double slope);
Mda act_relu6(const Mda& x);
Mda act_layer_norm(const Mda& x, const std::vector<size_t>& axes, double eps,
                   const std::vector<double>& gamma = {}, const std::vector<double>& beta = {});
Mda act_softmax(const Mda& x, size_t axis);

}  // namespace hct
