#include "hct/oracle.hpp"

#include <functional>
#include <stdexcept>

#include "json.hpp"

// Everything here is written against the file formats alone so that it stays
// an independent check on the engine. No code is shared with the evaluator.
namespace hct::oracle {

namespace {

struct Tensor {
  std::vector<long long> dims;
  std::vector<char> present;
  std::vector<double> value;  // dense over the grid, 0 where absent
  std::vector<long long> mins;  // smallest present coordinate per mode
};

long long volume(const std::vector<long long>& dims) {
  long long v = 1;
  for (long long d : dims) v *= d;
  return v;
}

Tensor parse_tensor(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Tensor t;
  for (const auto& d : j.at("shape")) t.dims.push_back(d.get<long long>());
  long long vol = volume(t.dims);
  t.present.assign(static_cast<size_t>(vol), 1);
  if (!(j.at("mask").is_string() && j["mask"].get<std::string>() == "dense")) {
    std::string bits = j["mask"].get<std::string>();
    for (long long i = 0; i < vol; ++i) t.present[static_cast<size_t>(i)] = bits[static_cast<size_t>(i)] == '1';
  }
  t.value.assign(static_cast<size_t>(vol), 0.0);
  size_t k = 0;
  const auto& data = j.at("data");
  for (long long i = 0; i < vol; ++i) {
    if (t.present[static_cast<size_t>(i)]) t.value[static_cast<size_t>(i)] = data.at(k++).get<double>();
  }
  // per-mode minimum present coordinate
  t.mins.assign(t.dims.size(), 0);
  for (size_t m = 0; m < t.dims.size(); ++m) {
    long long lo = -1;
    for (long long i = 0; i < vol; ++i) {
      if (!t.present[static_cast<size_t>(i)]) continue;
      long long rest = i, coord = 0;
      for (size_t q = t.dims.size(); q-- > 0;) {
        if (q == m) coord = rest % t.dims[q];
        rest /= t.dims[q];
      }
      if (lo < 0 || coord < lo) lo = coord;
    }
    t.mins[m] = lo < 0 ? 0 : lo;
  }
  return t;
}

double apply_named(const std::string& name, bool tuple_side, double a, double b) {
  if (name == "mul_add") return tuple_side ? a * b : a + b;
  if (name == "add_add") return a + b;
  if (name == "add_min") return tuple_side ? a + b : (a < b ? a : b);
  if (name == "max_plus") return tuple_side ? (a > b ? a : b) : a + b;
  throw std::runtime_error("oracle: unknown base operations " + name);
}

}  // namespace

std::string evaluate_json(const std::string& tom_json,
                          const std::vector<std::string>& operand_jsons) {
  nlohmann::json jt = nlohmann::json::parse(tom_json);
  const size_t rows = jt.at("rows").get<size_t>();
  const size_t cols = jt.at("cols").get<size_t>();
  std::vector<std::vector<int>> inc;
  for (const auto& r : jt.at("incidence")) {
    std::vector<int> row;
    for (const auto& b : r) row.push_back(b.get<int>());
    inc.push_back(row);
  }
  std::vector<bool> contracted;
  for (const auto& b : jt.at("contracted")) contracted.push_back(b.get<bool>());
  std::string base = jt.value("base_ops", "mul_add");

  std::vector<Tensor> ops;
  for (const auto& s : operand_jsons) ops.push_back(parse_tensor(s));
  if (ops.size() != rows) throw std::runtime_error("oracle: operand count mismatch");

  // column -> (row, mode) members; lengths must agree
  std::vector<long long> col_len(cols, -1);
  std::vector<std::vector<std::pair<size_t, size_t>>> members(cols);
  for (size_t r = 0; r < rows; ++r) {
    size_t mode = 0;
    for (size_t c = 0; c < cols; ++c) {
      if (!inc[r][c]) continue;
      members[c].push_back({r, mode});
      // tensor length: span of present coordinates
      long long lo = -1, hi = -1;
      long long vol = volume(ops[r].dims);
      for (long long i = 0; i < vol; ++i) {
        if (!ops[r].present[static_cast<size_t>(i)]) continue;
        long long rest = i, coord = 0;
        for (size_t q = ops[r].dims.size(); q-- > 0;) {
          if (q == mode) coord = rest % ops[r].dims[q];
          rest /= ops[r].dims[q];
        }
        if (lo < 0 || coord < lo) lo = coord;
        if (hi < 0 || coord > hi) hi = coord;
      }
      long long len = lo < 0 ? 0 : hi - lo + 1;
      if (col_len[c] >= 0 && col_len[c] != len) {
        throw std::runtime_error("oracle: coupled lengths differ on column " + std::to_string(c));
      }
      col_len[c] = len;
      ++mode;
    }
  }

  std::vector<size_t> out_cols, con_cols;
  for (size_t c = 0; c < cols; ++c) {
    (contracted[c] ? con_cols : out_cols).push_back(c);
  }

  std::vector<long long> out_dims, con_dims;
  for (size_t c : out_cols) out_dims.push_back(col_len[c]);
  for (size_t c : con_cols) con_dims.push_back(col_len[c]);
  long long out_vol = volume(out_dims);
  long long con_vol = volume(con_dims);

  std::vector<char> out_present(static_cast<size_t>(out_vol), 0);
  std::vector<double> out_value(static_cast<size_t>(out_vol), 0.0);

  std::vector<long long> coord(cols, 0);
  for (long long of = 0; of < out_vol; ++of) {
    long long rest = of;
    for (size_t k = out_cols.size(); k-- > 0;) {
      coord[out_cols[k]] = rest % out_dims[k];
      rest /= out_dims[k];
    }
    bool any = false;
    double acc = 0;
    for (long long cf = 0; cf < con_vol; ++cf) {
      long long crest = cf;
      for (size_t k = con_cols.size(); k-- > 0;) {
        coord[con_cols[k]] = crest % con_dims[k];
        crest /= con_dims[k];
      }
      bool tup_any = false;
      double tup = 0;
      for (size_t r = 0; r < rows; ++r) {
        // gather this row's pulled coords in mode order, then flatten row-major
        std::vector<long long> pc;
        for (size_t c = 0; c < cols; ++c) {
          if (inc[r][c]) pc.push_back(coord[c]);
        }
        for (size_t m = 0; m < pc.size(); ++m) pc[m] += ops[r].mins[m];
        long long idx = 0;
        for (size_t m = 0; m < pc.size(); ++m) idx = idx * ops[r].dims[m] + pc[m];
        if (!ops[r].present[static_cast<size_t>(idx)]) continue;
        double v = ops[r].value[static_cast<size_t>(idx)];
        tup = tup_any ? apply_named(base, true, tup, v) : v;
        tup_any = true;
      }
      if (!tup_any) continue;
      acc = any ? apply_named(base, false, acc, tup) : tup;
      any = true;
    }
    out_present[static_cast<size_t>(of)] = any ? 1 : 0;
    out_value[static_cast<size_t>(of)] = acc;
  }

  nlohmann::json j;
  j["shape"] = out_dims;
  bool dense = true;
  for (char p : out_present) dense = dense && p;
  if (dense) {
    j["mask"] = "dense";
  } else {
    std::string bits(out_present.size(), '0');
    for (size_t i = 0; i < out_present.size(); ++i) bits[i] = out_present[i] ? '1' : '0';
    j["mask"] = bits;
  }
  std::vector<double> data;
  for (size_t i = 0; i < out_present.size(); ++i) {
    if (out_present[i]) data.push_back(out_value[i]);
  }
  j["data"] = data;
  return j.dump();
}

}  // namespace hct::oracle
