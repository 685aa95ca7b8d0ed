#include "hct/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hct/rng.hpp"
#include "json.hpp"

namespace hct {

const TensorDecl* Architecture::find_tensor(const std::string& n) const {
  for (const auto& t : tensors) {
    if (t.name == n) return &t;
  }
  return nullptr;
}

std::string Architecture::to_json() const {
  nlohmann::json j;
  if (!name.empty()) j["name"] = name;
  nlohmann::json ts = nlohmann::json::array();
  for (const auto& t : tensors) {
    nlohmann::json jt;
    jt["name"] = t.name;
    jt["role"] = t.role;
    jt["shape"] = t.shape.dims;
    if (t.batch) jt["batch"] = true;
    ts.push_back(jt);
  }
  j["tensors"] = ts;
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json jr;
    if (r.is_op()) {
      jr["kind"] = "op";
      jr["tom"] = nlohmann::json::parse(r.op().tom.to_json());
      jr["inputs"] = r.op().inputs;
      jr["output"] = r.op().output;
    } else if (r.is_act()) {
      const ActRow& a = r.act();
      jr["kind"] = "act";
      jr["fn"] = a.fn;
      if (!a.axes.empty()) jr["axes"] = a.axes;
      if (a.fn == "layer_norm") jr["eps"] = a.eps;
      if (a.fn == "leaky_relu") jr["slope"] = a.slope;
      if (!a.gamma.empty()) jr["gamma"] = a.gamma;
      if (!a.beta.empty()) jr["beta"] = a.beta;
      jr["input"] = a.input;
      jr["output"] = a.output;
    } else {
      jr["kind"] = "modemap";
      jr["map"] = nlohmann::json::parse(r.map().map.to_json());
      jr["input"] = r.map().input;
      jr["output"] = r.map().output;
    }
    rs.push_back(jr);
  }
  j["rows"] = rs;
  return j.dump();
}

Architecture Architecture::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Architecture a;
  a.name = j.value("name", "");
  for (const auto& jt : j.at("tensors")) {
    TensorDecl t;
    t.name = jt.at("name").get<std::string>();
    t.role = jt.at("role").get<std::string>();
    for (const auto& d : jt.at("shape")) t.shape.dims.push_back(d.get<int64_t>());
    t.batch = jt.value("batch", false);
    a.tensors.push_back(std::move(t));
  }
  for (const auto& jr : j.at("rows")) {
    std::string kind = jr.at("kind").get<std::string>();
    Row row;
    if (kind == "op") {
      OpRow op;
      op.tom = Tom::from_json(jr.at("tom").dump());
      for (const auto& n : jr.at("inputs")) op.inputs.push_back(n.get<std::string>());
      op.output = jr.at("output").get<std::string>();
      row.body = std::move(op);
    } else if (kind == "act") {
      ActRow act;
      act.fn = jr.at("fn").get<std::string>();
      if (jr.contains("axes")) {
        for (const auto& x : jr["axes"]) act.axes.push_back(x.get<size_t>());
      }
      act.eps = jr.value("eps", 1e-5);
      act.slope = jr.value("slope", 0.01);
      if (jr.contains("gamma")) {
        for (const auto& x : jr["gamma"]) act.gamma.push_back(x.get<double>());
      }
      if (jr.contains("beta")) {
        for (const auto& x : jr["beta"]) act.beta.push_back(x.get<double>());
      }
      act.input = jr.at("input").get<std::string>();
      act.output = jr.at("output").get<std::string>();
      row.body = std::move(act);
    } else if (kind == "modemap") {
      MapRow mr;
      mr.map = ModeMap::from_json(jr.at("map").dump());
      mr.input = jr.at("input").get<std::string>();
      mr.output = jr.at("output").get<std::string>();
      row.body = std::move(mr);
    } else {
      throw structure_error("unknown row kind: " + kind);
    }
    a.rows.push_back(std::move(row));
  }
  return a;
}

namespace {

std::vector<std::string> row_reads(const Row& r) {
  if (r.is_op()) return r.op().inputs;
  if (r.is_act()) return {r.act().input};
  return {r.map().input};
}

std::string row_writes(const Row& r) {
  if (r.is_op()) return r.op().output;
  if (r.is_act()) return r.act().output;
  return r.map().output;
}

}  // namespace

TemReport validate_tem(const Architecture& a) {
  TemReport rep;
  auto fail = [&](const std::string& msg) {
    rep.ok = false;
    rep.violations.push_back(msg);
  };
  std::set<std::string> names;
  for (const auto& t : a.tensors) {
    if (!names.insert(t.name).second) fail("duplicate tensor name " + t.name);
    if (t.role != "input" && t.role != "weight" && t.role != "intermediate" &&
        t.role != "output") {
      fail("tensor " + t.name + ": unknown role " + t.role);
    }
  }
  std::map<std::string, int> producer;
  for (size_t i = 0; i < a.rows.size(); ++i) {
    for (const auto& n : row_reads(a.rows[i])) {
      if (!a.find_tensor(n)) fail("row " + std::to_string(i) + " reads unknown tensor " + n);
    }
    const std::string out = row_writes(a.rows[i]);
    const TensorDecl* t = a.find_tensor(out);
    if (!t) {
      fail("row " + std::to_string(i) + " writes unknown tensor " + out);
      continue;
    }
    if (t->role == "input" || t->role == "weight") {
      fail("row " + std::to_string(i) + " writes " + t->role + " tensor " + out);
    }
    if (producer.count(out)) {
      fail("tensor " + out + " written by rows " + std::to_string(producer[out]) + " and " +
           std::to_string(i));
    }
    producer[out] = static_cast<int>(i);
  }
  for (const auto& t : a.tensors) {
    if ((t.role == "intermediate" || t.role == "output") && !producer.count(t.name)) {
      fail("tensor " + t.name + " has no producer");
    }
  }
  if (!rep.ok) return rep;

  // acyclicity via Kahn over row dependencies
  std::vector<std::vector<size_t>> succ(a.rows.size());
  std::vector<size_t> indeg(a.rows.size(), 0);
  for (size_t i = 0; i < a.rows.size(); ++i) {
    for (const auto& n : row_reads(a.rows[i])) {
      auto it = producer.find(n);
      if (it != producer.end()) {
        succ[static_cast<size_t>(it->second)].push_back(i);
        ++indeg[i];
      }
    }
  }
  std::vector<size_t> queue;
  for (size_t i = 0; i < a.rows.size(); ++i) {
    if (indeg[i] == 0) queue.push_back(i);
  }
  size_t seen = 0;
  for (size_t q = 0; q < queue.size(); ++q) {
    ++seen;
    for (size_t s : succ[queue[q]]) {
      if (--indeg[s] == 0) queue.push_back(s);
    }
  }
  if (seen != a.rows.size()) {
    fail("dependency cycle among rows");
    return rep;
  }

  // shape closure
  for (size_t i = 0; i < a.rows.size(); ++i) {
    const Row& r = a.rows[i];
    if (r.is_op()) {
      const OpRow& op = r.op();
      if (op.inputs.size() != op.tom.arity) {
        fail("row " + std::to_string(i) + ": operand count != arity");
        continue;
      }
      bool shapes_ok = true;
      for (size_t k = 0; k < op.inputs.size(); ++k) {
        const TensorDecl* t = a.find_tensor(op.inputs[k]);
        if (t->shape != op.tom.operand_shapes[k]) {
          fail("row " + std::to_string(i) + ": operand " + t->name +
               " shape differs from the operation matrix");
          shapes_ok = false;
        }
      }
      if (!shapes_ok) continue;
      TomReport tr = validate_tom(op.tom);
      if (!tr.ok) {
        for (const auto& v : tr.violations) fail("row " + std::to_string(i) + ": " + v);
        continue;
      }
      const TensorDecl* out = a.find_tensor(op.output);
      if (out->shape != op.tom.output_shape()) {
        fail("row " + std::to_string(i) + ": output " + out->name +
             " shape differs from the operation's result shape");
      }
    } else if (r.is_act()) {
      const ActRow& act = r.act();
      const TensorDecl* in = a.find_tensor(act.input);
      const TensorDecl* out = a.find_tensor(act.output);
      if (in->shape != out->shape) {
        fail("row " + std::to_string(i) + ": activation must preserve shape");
      }
      for (size_t ax : act.axes) {
        if (ax >= in->shape.order()) {
          fail("row " + std::to_string(i) + ": activation axis out of range");
        }
      }
      if ((act.fn == "layer_norm" || act.fn == "softmax") && act.axes.empty()) {
        fail("row " + std::to_string(i) + ": " + act.fn + " needs an axis");
      }
      if (act.fn == "softmax" && act.axes.size() != 1) {
        fail("row " + std::to_string(i) + ": softmax takes exactly one axis");
      }
    } else {
      const MapRow& mr = r.map();
      const TensorDecl* in = a.find_tensor(mr.input);
      const TensorDecl* out = a.find_tensor(mr.output);
      if (in->shape != mr.map.source) {
        fail("row " + std::to_string(i) + ": mode map source shape mismatch");
      }
      if (out->shape != mr.map.target) {
        fail("row " + std::to_string(i) + ": mode map target shape mismatch");
      }
    }
  }
  return rep;
}

int64_t parameter_count(const Architecture& a) {
  int64_t n = 0;
  for (const auto& t : a.tensors) {
    if (t.role == "weight") n += t.shape.volume();
  }
  return n;
}

std::map<std::string, Mda> seeded_weights(const Architecture& a, uint64_t seed) {
  std::map<std::string, Mda> out;
  for (const auto& t : a.tensors) {
    if (t.role != "weight") continue;
    // fan: contracted column lengths this weight's modes fill in its first
    // consuming operation
    int64_t fan = 1;
    bool found = false;
    for (const auto& r : a.rows) {
      if (!r.is_op() || found) continue;
      const OpRow& op = r.op();
      for (size_t k = 0; k < op.inputs.size(); ++k) {
        if (op.inputs[k] != t.name) continue;
        found = true;
        std::vector<size_t> cols = op.tom.row_columns(k);
        for (size_t c : cols) {
          if (op.tom.contracted[c]) {
            fan *= op.tom.operand_shapes[k].dims[static_cast<size_t>(op.tom.mode_of(k, c))];
          }
        }
        break;
      }
    }
    double bound = 1.0 / std::sqrt(static_cast<double>(fan));
    // per-tensor stream so bindings do not depend on declaration order
    uint64_t h = seed;
    for (char ch : t.name) h = h * 1315423911ULL + static_cast<unsigned char>(ch);
    Rng rng(h);
    std::vector<double> vals(static_cast<size_t>(t.shape.volume()));
    for (auto& v : vals) v = rng.uniform(-bound, bound);
    out.emplace(t.name, Mda::dense(t.shape, std::move(vals)));
  }
  return out;
}

std::map<std::string, Mda> forward_trace(const Architecture& a,
                                         const std::map<std::string, Mda>& inputs,
                                         const std::map<std::string, Mda>& weights) {
  TemReport rep = validate_tem(a);
  if (!rep.ok) throw structure_error("forward: invalid network: " + rep.violations.front());
  std::map<std::string, Mda> env;
  for (const auto& t : a.tensors) {
    if (t.role == "input") {
      auto it = inputs.find(t.name);
      if (it == inputs.end()) throw structure_error("forward: missing input binding " + t.name);
      if (it->second.shape() != t.shape) {
        throw shape_error("forward: input " + t.name + " has the wrong shape");
      }
      env.emplace(t.name, it->second);
    } else if (t.role == "weight") {
      auto it = weights.find(t.name);
      if (it == weights.end()) throw structure_error("forward: missing weight binding " + t.name);
      if (it->second.shape() != t.shape) {
        throw shape_error("forward: weight " + t.name + " has the wrong shape");
      }
      env.emplace(t.name, it->second);
    }
  }

  // evaluate rows in dependency order
  std::vector<char> done(a.rows.size(), 0);
  size_t remaining = a.rows.size();
  while (remaining > 0) {
    bool progress = false;
    for (size_t i = 0; i < a.rows.size(); ++i) {
      if (done[i]) continue;
      bool ready = true;
      for (const auto& n : row_reads(a.rows[i])) ready = ready && env.count(n);
      if (!ready) continue;
      const Row& r = a.rows[i];
      if (r.is_op()) {
        const OpRow& op = r.op();
        std::vector<Mda> operands;
        for (const auto& n : op.inputs) operands.push_back(env.at(n));
        env.emplace(op.output, evaluate(op.tom, operands, base_ops_by_name(op.tom.base_ops)));
      } else if (r.is_act()) {
        const ActRow& act = r.act();
        const Mda& x = env.at(act.input);
        Mda y;
        if (act.fn == "leaky_relu") {
          y = act_leaky_relu(x, act.slope);
        } else if (act.fn == "relu6") {
          y = act_relu6(x);
        } else if (act.fn == "layer_norm") {
          y = act_layer_norm(x, act.axes, act.eps, act.gamma, act.beta);
        } else if (act.fn == "softmax") {
          y = act_softmax(x, act.axes.at(0));
        } else {
          throw structure_error("unknown activation " + act.fn);
        }
        env.emplace(act.output, std::move(y));
      } else {
        env.emplace(r.map().output, apply(r.map().map, env.at(r.map().input)));
      }
      done[i] = 1;
      --remaining;
      progress = true;
    }
    if (!progress) throw structure_error("forward: rows cannot be ordered");
  }
  return env;
}

std::map<std::string, Mda> forward(const Architecture& a,
                                   const std::map<std::string, Mda>& inputs,
                                   const std::map<std::string, Mda>& weights) {
  std::map<std::string, Mda> env = forward_trace(a, inputs, weights);
  std::map<std::string, Mda> out;
  for (const auto& t : a.tensors) {
    if (t.role == "output") out.emplace(t.name, env.at(t.name));
  }
  return out;
}

ComplexitySignature signature(const Architecture& a, bool count_activations) {
  ComplexitySignature sig;
  // alias chains: activation outputs and packaging tensors stand for their
  // inputs at the tensor-counting level
  std::map<std::string, std::string> alias;
  for (const auto& r : a.rows) {
    if (r.is_act()) alias[r.act().output] = r.act().input;
    if (r.is_map()) alias[r.map().output] = r.map().input;
  }
  auto root = [&](std::string n) {
    while (alias.count(n)) n = alias[n];
    return n;
  };

  size_t op_rows = 0, act_rows = 0;
  std::set<std::string> used;
  std::string single_output;
  for (const auto& r : a.rows) {
    if (r.is_act()) {
      ++act_rows;
      continue;
    }
    if (!r.is_op()) continue;
    ++op_rows;
    const OpRow& op = r.op();
    for (const auto& n : op.inputs) used.insert(root(n));
    used.insert(root(op.output));
    single_output = root(op.output);
    sig.c_alpha = std::max<int64_t>(sig.c_alpha, static_cast<int64_t>(op.tom.arity));
    // order complexity skips columns made purely of batch modes
    int64_t cols = 0;
    for (size_t c = 0; c < op.tom.cols; ++c) {
      bool batch_col = true;
      for (size_t rr : op.tom.column_rows(c)) {
        const TensorDecl* t = a.find_tensor(op.inputs[rr]);
        bool is_batch_mode = t && t->batch && op.tom.mode_of(rr, c) == 0;
        batch_col = batch_col && is_batch_mode;
      }
      if (!batch_col) ++cols;
    }
    sig.c_o = std::max<int64_t>(sig.c_o, cols);
    sig.c_a = std::max<int64_t>(sig.c_a, static_cast<int64_t>(tom_complexity(op.tom).coupling_arity));
  }
  // a one-operation block is just the operation; its result is not a cell of it
  if (op_rows == 1) used.erase(single_output);
  sig.c_op = static_cast<int64_t>(op_rows + (count_activations ? act_rows : 0));
  sig.c_t = static_cast<int64_t>(used.size());
  return sig;
}

Architecture expand_row_to_binary(const Architecture& a, size_t row_index) {
  if (row_index >= a.rows.size() || !a.rows[row_index].is_op()) {
    throw structure_error("expand_row_to_binary: not an operation row");
  }
  const OpRow& op = a.rows[row_index].op();
  if (op.tom.arity <= 2) return a;
  std::vector<Tom> chain = decompose_to_binary(op.tom, base_ops_by_name(op.tom.base_ops));
  Architecture out = a;
  out.rows.erase(out.rows.begin() + static_cast<long>(row_index));
  std::string prev = op.inputs[0];
  std::vector<Row> new_rows;
  for (size_t i = 0; i < chain.size(); ++i) {
    OpRow r;
    r.tom = chain[i];
    r.inputs = {i == 0 ? op.inputs[0] : prev, op.inputs[i + 1]};
    if (i + 1 == chain.size()) {
      r.output = op.output;
    } else {
      r.output = op.output + "__part" + std::to_string(i);
      TensorDecl t;
      t.name = r.output;
      t.role = "intermediate";
      t.shape = chain[i].output_shape();
      out.tensors.push_back(t);
    }
    prev = r.output;
    new_rows.push_back(Row{std::move(r)});
  }
  out.rows.insert(out.rows.begin() + static_cast<long>(row_index),
                  std::make_move_iterator(new_rows.begin()),
                  std::make_move_iterator(new_rows.end()));
  return out;
}

namespace {

Mda elementwise(const Mda& x, double (*f)(double, double), double p) {
  Mda::Builder b(x.shape());
  for (int64_t i = 0; i < x.volume(); ++i) {
    if (!x.present(i)) {
      b.push_absent();
      continue;
    }
    double v = f(x.scalar(i), p);
    b.push_cell(std::span<const double>(&v, 1));
  }
  return b.build();
}

}  // namespace

Mda act_leaky_relu(const Mda& x, double slope) {
  return elementwise(
      x, [](double v, double s) { return v >= 0 ? v : s * v; }, slope);
}

Mda act_relu6(const Mda& x) {
  return elementwise(
      x, [](double v, double) { return v < 0 ? 0.0 : (v > 6 ? 6.0 : v); }, 0);
}

Mda act_layer_norm(const Mda& x, const std::vector<size_t>& axes, double eps,
                   const std::vector<double>& gamma, const std::vector<double>& beta) {
  if (x.is_hyper()) throw shape_error("layer_norm: operand must not be hyper");
  SliceSpace ss(x, axes);
  const Shape& inner = ss.inner_shape();
  if (!gamma.empty() && static_cast<int64_t>(gamma.size()) != inner.volume()) {
    throw shape_error("layer_norm: gamma size must match the normalized grid");
  }
  if (!beta.empty() && static_cast<int64_t>(beta.size()) != inner.volume()) {
    throw shape_error("layer_norm: beta size must match the normalized grid");
  }
  std::vector<double> out(static_cast<size_t>(x.volume()), 0.0);
  std::vector<bool> mask(static_cast<size_t>(x.volume()), false);
  std::vector<int64_t> oc, full(x.shape().order()), ic;
  for (int64_t of = 0; of < ss.outer_shape().volume(); ++of) {
    unflatten(ss.outer_shape(), of, oc);
    for (size_t i = 0; i < ss.outer_modes().size(); ++i) full[ss.outer_modes()[i]] = oc[i];
    // statistics over present entries of the axes grid
    double mean = 0;
    int64_t n = 0;
    for (int64_t f = 0; f < inner.volume(); ++f) {
      unflatten(inner, f, ic);
      for (size_t i = 0; i < axes.size(); ++i) full[ss.inner_modes()[i]] = ic[i];
      int64_t pos = flat_index(x.shape(), full);
      if (!x.present(pos)) continue;
      mean += x.scalar(pos);
      ++n;
    }
    if (n == 0) continue;
    mean /= static_cast<double>(n);
    double var = 0;
    for (int64_t f = 0; f < inner.volume(); ++f) {
      unflatten(inner, f, ic);
      for (size_t i = 0; i < axes.size(); ++i) full[ss.inner_modes()[i]] = ic[i];
      int64_t pos = flat_index(x.shape(), full);
      if (!x.present(pos)) continue;
      double d = x.scalar(pos) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    double denom = std::sqrt(var + eps);
    for (int64_t f = 0; f < inner.volume(); ++f) {
      unflatten(inner, f, ic);
      for (size_t i = 0; i < axes.size(); ++i) full[ss.inner_modes()[i]] = ic[i];
      int64_t pos = flat_index(x.shape(), full);
      if (!x.present(pos)) continue;
      double g = gamma.empty() ? 1.0 : gamma[static_cast<size_t>(f)];
      double bt = beta.empty() ? 0.0 : beta[static_cast<size_t>(f)];
      out[static_cast<size_t>(pos)] = g * (x.scalar(pos) - mean) / denom + bt;
      mask[static_cast<size_t>(pos)] = true;
    }
  }
  std::vector<double> packed;
  for (int64_t i = 0; i < x.volume(); ++i) {
    if (mask[static_cast<size_t>(i)]) packed.push_back(out[static_cast<size_t>(i)]);
  }
  bool dense = x.is_dense();
  if (dense) return Mda::dense(x.shape(), std::move(packed));
  return Mda::jagged(x.shape(), mask, std::move(packed));
}

Mda act_softmax(const Mda& x, size_t axis) {
  if (x.is_hyper()) throw shape_error("softmax: operand must not be hyper");
  if (axis >= x.shape().order()) throw shape_error("softmax: axis out of range");
  SliceSpace ss(x, {axis});
  std::vector<double> out(static_cast<size_t>(x.volume()), 0.0);
  std::vector<bool> mask(static_cast<size_t>(x.volume()), false);
  std::vector<int64_t> oc, full(x.shape().order());
  for (int64_t of = 0; of < ss.outer_shape().volume(); ++of) {
    unflatten(ss.outer_shape(), of, oc);
    for (size_t i = 0; i < ss.outer_modes().size(); ++i) full[ss.outer_modes()[i]] = oc[i];
    double hi = 0;
    bool any = false;
    for (int64_t k = 0; k < x.shape().dims[axis]; ++k) {
      full[axis] = k;
      int64_t pos = flat_index(x.shape(), full);
      if (!x.present(pos)) continue;
      hi = any ? std::max(hi, x.scalar(pos)) : x.scalar(pos);
      any = true;
    }
    if (!any) continue;
    double denom = 0;
    for (int64_t k = 0; k < x.shape().dims[axis]; ++k) {
      full[axis] = k;
      int64_t pos = flat_index(x.shape(), full);
      if (!x.present(pos)) continue;
      denom += std::exp(x.scalar(pos) - hi);
    }
    for (int64_t k = 0; k < x.shape().dims[axis]; ++k) {
      full[axis] = k;
      int64_t pos = flat_index(x.shape(), full);
      if (!x.present(pos)) continue;
      out[static_cast<size_t>(pos)] = std::exp(x.scalar(pos) - hi) / denom;
      mask[static_cast<size_t>(pos)] = true;
    }
  }
  std::vector<double> packed;
  for (int64_t i = 0; i < x.volume(); ++i) {
    if (mask[static_cast<size_t>(i)]) packed.push_back(out[static_cast<size_t>(i)]);
  }
  if (x.is_dense()) return Mda::dense(x.shape(), std::move(packed));
  return Mda::jagged(x.shape(), mask, std::move(packed));
}

}  // namespace hct
