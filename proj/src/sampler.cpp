#include "hct/sampler.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "hct/rng.hpp"
#include "json.hpp"

namespace hct {

void SampleConstraints::validate() const {
  if (c_op_min < 1 || c_op_max < c_op_min) throw sampling_error("bad operation range");
  if (c_t_max < c_t_min) throw sampling_error("bad tensor range");
  if (c_alpha_min < 2 || c_alpha_max < c_alpha_min) throw sampling_error("bad arity range");
  if (c_a_min < 2 || c_a_max < c_a_min) throw sampling_error("bad coupling range");
  if (c_o_max < 2) throw sampling_error("bad order bound");
  if (input.order() == 0) throw sampling_error("input shape required");
}

namespace {

struct ColumnDraft {
  int64_t size = 0;
  bool contracted = false;
  std::vector<std::pair<size_t, size_t>> members;  // (operand row, operand mode)
};

struct RowDraft {
  std::vector<std::string> operand_names;  // pool names; "" = fresh weight
  std::vector<Shape> operand_shapes;
  std::vector<ColumnDraft> columns;
};

// Mode sizes for fresh columns: divisors of the input-shape product, kept
// desk-scale.
std::vector<int64_t> fresh_sizes(const Shape& input) {
  int64_t volume = input.volume();
  std::vector<int64_t> sizes;
  for (int64_t d = 1; d <= 64; ++d) {
    if (volume % d == 0) sizes.push_back(d);
  }
  if (sizes.empty()) sizes.push_back(1);
  return sizes;
}

// Attempts one TOM draw for a row given its operand list. Known operands have
// fixed shapes; fresh weight modes inherit joined column sizes or draw new
// divisor sizes.
bool draw_tom(Rng& rng, const SampleConstraints& c, const std::vector<int64_t>& sizes,
              const std::vector<Shape>& operand_shapes, const std::vector<bool>& is_fresh,
              RowDraft& out) {
  const size_t arity = operand_shapes.size();
  std::vector<ColumnDraft> columns;
  // a row's modes map to its filled columns in declared order, so each
  // operand's columns must ascend with its modes
  std::vector<int64_t> last_col(arity, -1);
  for (size_t r = 0; r < arity; ++r) {
    size_t order = is_fresh[r] ? static_cast<size_t>(rng.range(1, 3))
                               : operand_shapes[r].order();
    for (size_t m = 0; m < order; ++m) {
      int64_t known_size = is_fresh[r] ? -1 : operand_shapes[r].dims[m];
      // candidate columns to couple into
      std::vector<size_t> cands;
      for (size_t k = 0; k < columns.size(); ++k) {
        if (static_cast<int64_t>(k) <= last_col[r]) continue;
        if (static_cast<int64_t>(columns[k].members.size()) >=
            c.c_a_max) {
          continue;
        }
        bool has_r = false;
        for (auto [rr, mm] : columns[k].members) has_r = has_r || rr == r;
        if (has_r) continue;  // an operand meets a coupling at most once
        if (known_size >= 0 && columns[k].size != known_size) continue;
        cands.push_back(k);
      }
      bool join = !cands.empty() && rng.coin();
      if (join) {
        size_t k = cands[rng.below(cands.size())];
        columns[k].members.push_back({r, m});
        last_col[r] = static_cast<int64_t>(k);
      } else {
        if (static_cast<int64_t>(columns.size()) >= c.c_o_max) return false;
        ColumnDraft col;
        col.size = known_size >= 0 ? known_size : sizes[rng.below(sizes.size())];
        col.members.push_back({r, m});
        columns.push_back(col);
        last_col[r] = static_cast<int64_t>(columns.size()) - 1;
      }
    }
  }
  if (static_cast<int64_t>(columns.size()) < 2) return false;
  // every operand pair should interact through at least one coupling
  size_t max_fill = 0;
  for (const auto& col : columns) max_fill = std::max(max_fill, col.members.size());
  if (static_cast<int64_t>(max_fill) < 2) return false;

  // contraction flags; keep at least one output mode
  int64_t grid = 1, out_elems = 1;
  size_t out_cols = 0;
  for (auto& col : columns) {
    col.contracted = rng.coin();
  }
  size_t flip = rng.below(columns.size());
  columns[flip].contracted = false;
  for (const auto& col : columns) {
    grid *= col.size;
    if (grid > c.grid_cap) return false;
    if (!col.contracted) {
      ++out_cols;
      out_elems *= col.size;
      if (out_elems > c.tensor_cap) return false;
    }
  }
  if (out_cols == 0) return false;
  out.columns = std::move(columns);
  return true;
}

// column members are discovered operand-major; reorder them into stable
// (row, mode) order per column for the incidence matrix
Tom tom_from_draft(const RowDraft& d) {
  Tom t;
  t.arity = d.operand_shapes.size();
  t.cols = d.columns.size();
  t.incidence.assign(t.arity, std::vector<uint8_t>(t.cols, 0));
  t.contracted.resize(t.cols);
  for (size_t k = 0; k < d.columns.size(); ++k) {
    t.contracted[k] = d.columns[k].contracted;
    for (auto [r, m] : d.columns[k].members) t.incidence[r][k] = 1;
  }
  t.operand_shapes = d.operand_shapes;
  t.base_ops = "mul_add";
  return t;
}

}  // namespace

Architecture sample_architecture(const SampleConstraints& c, uint64_t seed) {
  c.validate();
  Rng rng(seed);
  for (int64_t attempt = 0; attempt < c.block_budget; ++attempt) {
    Architecture a;
    a.name = "sample_" + std::to_string(seed);
    a.tensors.push_back(TensorDecl{"X", "input", c.input, false});
    const std::vector<int64_t> sizes = fresh_sizes(c.input);
    std::vector<std::string> pool = {"X"};
    int64_t weight_no = 0;
    const int64_t c_op = rng.range(c.c_op_min, c.c_op_max);
    bool dead = false;
    for (int64_t r = 0; r < c_op && !dead; ++r) {
      bool placed = false;
      for (int64_t draw = 0; draw < c.tom_budget; ++draw) {
        const int64_t arity = rng.range(c.c_alpha_min, c.c_alpha_max);
        const int64_t known =
            rng.range(1, std::min<int64_t>(arity, static_cast<int64_t>(pool.size())));
        // sample distinct pool tensors
        std::vector<std::string> chosen = pool;
        for (size_t i = 0; i + 1 < chosen.size(); ++i) {
          size_t j = i + static_cast<size_t>(rng.below(chosen.size() - i));
          std::swap(chosen[i], chosen[j]);
        }
        chosen.resize(static_cast<size_t>(known));
        RowDraft draft;
        std::vector<bool> is_fresh;
        for (const auto& n : chosen) {
          draft.operand_names.push_back(n);
          draft.operand_shapes.push_back(a.find_tensor(n)->shape);
          is_fresh.push_back(false);
        }
        for (int64_t w = known; w < arity; ++w) {
          draft.operand_names.push_back("");
          draft.operand_shapes.push_back(Shape{});
          is_fresh.push_back(true);
        }
        if (!draw_tom(rng, c, sizes, draft.operand_shapes, is_fresh, draft)) continue;
        // fresh weight shapes from their columns
        bool fresh_ok = true;
        for (size_t q = 0; q < draft.operand_names.size(); ++q) {
          if (!is_fresh[q]) continue;
          std::vector<std::pair<size_t, int64_t>> modes;  // (mode, size)
          for (size_t k = 0; k < draft.columns.size(); ++k) {
            for (auto [rr, mm] : draft.columns[k].members) {
              if (rr == q) modes.push_back({mm, draft.columns[k].size});
            }
          }
          std::sort(modes.begin(), modes.end());
          Shape s;
          for (auto [mm, sz] : modes) s.dims.push_back(sz);
          if (s.volume() > c.tensor_cap) {
            fresh_ok = false;
            break;
          }
          draft.operand_shapes[q] = s;
        }
        if (!fresh_ok) continue;
        // register fresh weights and the output tensor
        for (size_t q = 0; q < draft.operand_names.size(); ++q) {
          if (!is_fresh[q]) continue;
          std::string wn = "W" + std::to_string(++weight_no);
          draft.operand_names[q] = wn;
          a.tensors.push_back(TensorDecl{wn, "weight", draft.operand_shapes[q], false});
        }
        OpRow op;
        op.tom = tom_from_draft(draft);
        op.inputs = draft.operand_names;
        op.output = "Z" + std::to_string(r + 1);
        Shape out_shape = op.tom.output_shape();
        a.tensors.push_back(TensorDecl{
            op.output, r + 1 == c_op ? "output" : "intermediate", out_shape, false});
        pool.push_back(op.output);
        a.rows.push_back(Row{std::move(op)});
        placed = true;
        break;
      }
      if (!placed) dead = true;
    }
    if (dead) {
      throw sampling_error("sample_architecture: per-row rejection budget exhausted (seed " +
                           std::to_string(seed) + ")");
    }
    ComplexitySignature sig = signature(a);
    if (sig.c_t < c.c_t_min || sig.c_t > c.c_t_max) continue;
    if (sig.c_a < c.c_a_min || sig.c_a > c.c_a_max) continue;
    TemReport rep = validate_tem(a);
    if (!rep.ok) {
      throw sampling_error("sample_architecture: constructed block failed validation: " +
                           rep.violations.front());
    }
    return a;
  }
  throw sampling_error("sample_architecture: block budget exhausted (seed " +
                       std::to_string(seed) + ")");
}

Architecture insert_activations(const Architecture& a, uint64_t seed) {
  Rng rng(seed ^ 0xac71fa7105ULL);
  Architecture out = a;
  const std::vector<std::string> kinds = {"leaky_relu", "relu6", "layer_norm", "softmax"};
  std::vector<Row> rows;
  std::map<std::string, std::string> rewire;
  int act_no = 0;
  for (const Row& r : out.rows) {
    Row patched = r;
    // consumers read the latest activated value
    if (patched.is_op()) {
      for (auto& n : std::get<OpRow>(patched.body).inputs) {
        auto it = rewire.find(n);
        if (it != rewire.end()) n = it->second;
      }
    } else if (patched.is_act()) {
      auto& act = std::get<ActRow>(patched.body);
      auto it = rewire.find(act.input);
      if (it != rewire.end()) act.input = it->second;
    } else {
      auto& mr = std::get<MapRow>(patched.body);
      auto it = rewire.find(mr.input);
      if (it != rewire.end()) mr.input = it->second;
    }
    rows.push_back(patched);
    if (!patched.is_op()) continue;

    const std::string op_output = patched.op().output;
    uint64_t coin = rng.below(4);
    int n_acts = coin < 2 ? 0 : (coin == 2 ? 1 : 2);
    std::string current = op_output;
    const TensorDecl* out_decl = out.find_tensor(op_output);
    Shape out_shape = out_decl->shape;
    bool was_output = out_decl->role == "output";
    for (int k = 0; k < n_acts; ++k) {
      ActRow act;
      act.fn = kinds[rng.below(kinds.size())];
      if (act.fn == "layer_norm" || act.fn == "softmax") {
        act.axes = {static_cast<size_t>(rng.below(out_shape.order()))};
      }
      act.input = current;
      act.output = op_output + "_a" + std::to_string(++act_no);
      current = act.output;
      out.tensors.push_back(TensorDecl{act.output, "intermediate", out_shape, false});
      rows.push_back(Row{std::move(act)});
    }
    if (n_acts > 0) {
      rewire[op_output] = current;
      if (was_output) {
        // the activated value becomes the block output
        for (auto& t : out.tensors) {
          if (t.name == op_output) t.role = "intermediate";
          if (t.name == current) t.role = "output";
        }
      }
    }
  }
  out.rows = std::move(rows);
  return out;
}

std::string DatasetManifest::to_json() const {
  nlohmann::json j;
  j["generator"] = "splitmix64";
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json jr;
    jr["file"] = r.file;
    jr["seed"] = r.seed;
    jr["params"] = r.params;
    jr["signature"] = {{"c_op", r.sig.c_op},
                       {"c_t", r.sig.c_t},
                       {"c_alpha", r.sig.c_alpha},
                       {"c_o", r.sig.c_o},
                       {"c_a", r.sig.c_a}};
    rs.push_back(jr);
  }
  j["records"] = rs;
  j["skipped"] = skipped;
  return j.dump();
}

DatasetManifest emit_dataset(int64_t n, const SampleConstraints& c, uint64_t base_seed,
                             const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  DatasetManifest manifest;
  for (int64_t i = 0; i < n; ++i) {
    uint64_t seed = base_seed + static_cast<uint64_t>(i);
    Architecture a;
    try {
      a = insert_activations(sample_architecture(c, seed), seed);
    } catch (const sampling_error&) {
      manifest.skipped.push_back(seed);
      continue;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "arch_%05lld.json", static_cast<long long>(i));
    std::string file = buf;
    std::ofstream os(std::filesystem::path(out_dir) / file, std::ios::binary);
    os << a.to_json() << "\n";
    manifest.records.push_back(
        DatasetRecord{file, seed, signature(a), parameter_count(a)});
  }
  std::ofstream os(std::filesystem::path(out_dir) / "manifest.json", std::ios::binary);
  os << manifest.to_json() << "\n";
  return manifest;
}

}  // namespace hct
