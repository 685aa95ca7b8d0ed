#include "hct/pwohg.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "json.hpp"

namespace hct {

bool Edge::contains(VertexId v) const { return index_of(v) >= 0; }

int64_t Edge::index_of(VertexId v) const {
  for (size_t i = 0; i < classes.size(); ++i) {
    for (VertexId u : classes[i]) {
      if (u == v) return static_cast<int64_t>(i);
    }
  }
  return -1;
}

std::vector<VertexId> Edge::vertices() const {
  std::vector<VertexId> out;
  for (const auto& c : classes) out.insert(out.end(), c.begin(), c.end());
  return out;
}

std::string Pwohg::label(VertexId v) const {
  if (v < labels.size() && !labels[v].empty()) return labels[v];
  return "#" + std::to_string(v);
}

std::string Pwohg::to_json() const {
  nlohmann::json j;
  if (!labels.empty()) j["elements"] = labels;
  j["num_vertices"] = num_vertices;
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : modes) {
    nlohmann::json jm;
    jm["name"] = m.name;
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : m.edges) edges.push_back(e.classes);
    jm["edges"] = edges;
    ms.push_back(jm);
  }
  j["modes"] = ms;
  if (!values.empty()) j["values"] = values;
  return j.dump();
}

Pwohg Pwohg::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Pwohg g;
  if (j.contains("elements")) {
    for (const auto& e : j["elements"]) g.labels.push_back(e.get<std::string>());
  }
  uint32_t max_id = 0;
  bool any = false;
  for (const auto& jm : j.at("modes")) {
    Mode m;
    m.name = jm.value("name", "");
    for (const auto& je : jm.at("edges")) {
      Edge e;
      for (const auto& jc : je) {
        std::vector<VertexId> cls;
        for (const auto& v : jc) cls.push_back(v.get<VertexId>());
        if (cls.empty()) throw structure_error("empty index class in edge");
        e.classes.push_back(std::move(cls));
      }
      if (e.classes.empty()) throw structure_error("empty edge");
      for (VertexId v : e.vertices()) {
        max_id = std::max(max_id, v);
        any = true;
      }
      m.edges.push_back(std::move(e));
    }
    g.modes.push_back(std::move(m));
  }
  if (j.contains("num_vertices")) {
    g.num_vertices = j["num_vertices"].get<uint32_t>();
  } else {
    g.num_vertices = any ? max_id + 1 : 0;
  }
  if (!g.labels.empty()) g.num_vertices = std::max<uint32_t>(g.num_vertices, g.labels.size());
  if (j.contains("values")) {
    for (const auto& v : j["values"]) g.values.push_back(v.get<double>());
    if (g.values.size() != g.num_vertices) throw structure_error("values size mismatch");
  }
  for (const auto& m : g.modes) {
    for (const auto& e : m.edges) {
      std::set<VertexId> seen;
      for (VertexId v : e.vertices()) {
        if (v >= g.num_vertices) throw structure_error("edge references unknown vertex");
        if (!seen.insert(v).second) {
          throw structure_error("edge lists vertex " + std::to_string(v) + " twice");
        }
      }
    }
  }
  return g;
}

int64_t path_distance(const Pwohg& g, VertexId start, const std::vector<PathStep>& steps,
                      size_t mode) {
  return path_distance_vector(g, start, steps)[mode];
}

std::vector<int64_t> path_distance_vector(const Pwohg& g, VertexId start,
                                          const std::vector<PathStep>& steps) {
  std::vector<int64_t> d(g.modes.size(), 0);
  VertexId at = start;
  for (const auto& s : steps) {
    if (s.mode >= g.modes.size() || s.edge >= g.modes[s.mode].edges.size()) {
      throw structure_error("path step names an unknown edge");
    }
    const Edge& e = g.modes[s.mode].edges[s.edge];
    int64_t from = e.index_of(at);
    int64_t to = e.index_of(s.to);
    if (from < 0 || to < 0) {
      throw structure_error("path step vertices do not co-occur in the named edge");
    }
    d[s.mode] += to - from;
    at = s.to;
  }
  return d;
}

namespace {

struct Incidence {
  // per vertex: (mode, edge) pairs containing it
  std::vector<std::vector<std::pair<size_t, size_t>>> at;
};

Incidence build_incidence(const Pwohg& g) {
  Incidence inc;
  inc.at.resize(g.num_vertices);
  for (size_t p = 0; p < g.modes.size(); ++p) {
    for (size_t e = 0; e < g.modes[p].edges.size(); ++e) {
      for (VertexId v : g.modes[p].edges[e].vertices()) {
        inc.at[v].push_back({p, e});
      }
    }
  }
  return inc;
}

}  // namespace

SoccReport check_socc(const Pwohg& g) {
  SoccReport rep;
  const size_t P = g.modes.size();
  rep.coords.assign(g.num_vertices, {});
  if (g.num_vertices == 0) {
    rep.connected = true;
    rep.consistent = true;
    return rep;
  }
  Incidence inc = build_incidence(g);
  std::vector<char> seen(g.num_vertices, 0);
  std::vector<VertexId> parent(g.num_vertices, 0);
  std::deque<VertexId> queue;
  seen[0] = 1;
  rep.coords[0].assign(P, 0);
  queue.push_back(0);
  size_t visited = 0;
  rep.consistent = true;
  while (!queue.empty()) {
    VertexId v = queue.front();
    queue.pop_front();
    ++visited;
    for (auto [p, ei] : inc.at[v]) {
      const Edge& e = g.modes[p].edges[ei];
      int64_t iv = e.index_of(v);
      for (size_t ci = 0; ci < e.classes.size(); ++ci) {
        for (VertexId u : e.classes[ci]) {
          if (u == v) continue;
          std::vector<int64_t> cu = rep.coords[v];
          cu[p] += static_cast<int64_t>(ci) - iv;
          if (!seen[u]) {
            seen[u] = 1;
            parent[u] = v;
            rep.coords[u] = std::move(cu);
            queue.push_back(u);
          } else if (rep.coords[u] != cu) {
            rep.consistent = false;
            if (!rep.witness) {
              // closed walk: u -> ... -> root -> ... -> v -> u
              std::vector<VertexId> up, down;
              for (VertexId x = u;; x = parent[x]) {
                up.push_back(x);
                if (x == 0) break;
              }
              for (VertexId x = v;; x = parent[x]) {
                down.push_back(x);
                if (x == 0) break;
              }
              std::vector<VertexId> cyc(up.begin(), up.end());
              for (auto it = down.rbegin(); it != down.rend(); ++it) {
                if (cyc.empty() || cyc.back() != *it) cyc.push_back(*it);
              }
              cyc.push_back(u);
              rep.witness = std::move(cyc);
            }
          }
        }
      }
    }
  }
  rep.connected = visited == g.num_vertices;
  return rep;
}

std::vector<std::vector<VertexId>> tuples(const Pwohg& g) {
  SoccReport rep = check_socc(g);
  if (!rep.consistent) throw structure_error("tuples: graph violates the ordering conditions");
  if (!rep.connected) throw structure_error("tuples: graph is disconnected");
  std::map<std::vector<int64_t>, std::vector<VertexId>> by_coord;
  for (VertexId v = 0; v < g.num_vertices; ++v) by_coord[rep.coords[v]].push_back(v);
  std::vector<std::vector<VertexId>> out;
  out.reserve(by_coord.size());
  for (auto& [c, vs] : by_coord) out.push_back(std::move(vs));
  // deterministic: order by smallest member
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

MultiIndexAssignment assign_multi_indices(const Pwohg& g, VertexId origin) {
  SoccReport rep = check_socc(g);
  if (!rep.valid()) {
    throw structure_error("assign_multi_indices: graph must be connected and consistent");
  }
  if (origin >= g.num_vertices) throw structure_error("assign_multi_indices: unknown origin");
  MultiIndexAssignment out;
  out.tuple_sets = tuples(g);
  const size_t P = g.modes.size();
  const std::vector<int64_t>& base = rep.coords[origin];
  out.indices.reserve(out.tuple_sets.size());
  for (const auto& t : out.tuple_sets) {
    std::vector<int64_t> idx(P);
    for (size_t p = 0; p < P; ++p) idx[p] = rep.coords[t.front()][p] - base[p];
    out.indices.push_back(std::move(idx));
  }
  out.offsets.assign(P, 0);
  for (size_t p = 0; p < P; ++p) {
    int64_t lo = 0;
    for (const auto& idx : out.indices) lo = std::min(lo, idx[p]);
    out.offsets[p] = 1 - lo;
  }
  for (auto& idx : out.indices) {
    for (size_t p = 0; p < P; ++p) idx[p] += out.offsets[p];
  }
  return out;
}

namespace {

void sort_and_dedup_edges(Pwohg& g) {
  for (auto& m : g.modes) {
    for (auto& e : m.edges) {
      for (auto& c : e.classes) std::sort(c.begin(), c.end());
    }
    std::sort(m.edges.begin(), m.edges.end(), [](const Edge& a, const Edge& b) {
      return a.classes < b.classes;
    });
    m.edges.erase(std::unique(m.edges.begin(), m.edges.end()), m.edges.end());
  }
}

}  // namespace

Pwohg maximal_representative(const Pwohg& g) {
  SoccReport rep = check_socc(g);
  if (!rep.valid()) {
    throw structure_error("maximal_representative: graph must be connected and consistent");
  }
  Pwohg out = g;
  const size_t P = g.modes.size();
  // Zero-distance pairs share an unordered pair edge in every mode;
  // unit-vector pairs share an ordered pair edge in the distinguishing mode.
  for (VertexId a = 0; a < g.num_vertices; ++a) {
    for (VertexId b = a + 1; b < g.num_vertices; ++b) {
      std::vector<int64_t> d(P);
      size_t nonzero = 0;
      size_t which = 0;
      for (size_t p = 0; p < P; ++p) {
        d[p] = rep.coords[b][p] - rep.coords[a][p];
        if (d[p] != 0) {
          ++nonzero;
          which = p;
        }
      }
      if (nonzero == 0) {
        for (auto& m : out.modes) m.edges.push_back(Edge{{{a, b}}});
      } else if (nonzero == 1 && (d[which] == 1 || d[which] == -1)) {
        if (d[which] == 1) {
          out.modes[which].edges.push_back(Edge{{{a}, {b}}});
        } else {
          out.modes[which].edges.push_back(Edge{{{b}, {a}}});
        }
      }
    }
  }
  sort_and_dedup_edges(out);
  return out;
}

Pwohg canonical_representative(const Pwohg& g) {
  SoccReport rep = check_socc(g);
  if (!rep.valid()) {
    throw structure_error("canonical_representative: graph must be connected and consistent");
  }
  for (const auto& t : tuples(g)) {
    if (t.size() > 1) {
      throw structure_error("canonical_representative: strong ordering condition fails "
                            "(non-singleton tuple)");
    }
  }
  Pwohg maxed = maximal_representative(g);
  Pwohg out;
  out.num_vertices = g.num_vertices;
  out.labels = g.labels;
  out.values = g.values;
  out.modes.resize(maxed.modes.size());
  for (size_t p = 0; p < maxed.modes.size(); ++p) {
    out.modes[p].name = maxed.modes[p].name;
    const auto& edges = maxed.modes[p].edges;
    // union-find over edges that share a vertex
    std::vector<size_t> uf(edges.size());
    for (size_t i = 0; i < uf.size(); ++i) uf[i] = i;
    auto find = [&](size_t x) {
      while (uf[x] != x) x = uf[x] = uf[uf[x]];
      return x;
    };
    std::vector<int64_t> owner(g.num_vertices, -1);
    for (size_t ei = 0; ei < edges.size(); ++ei) {
      for (VertexId v : edges[ei].vertices()) {
        if (owner[v] < 0) {
          owner[v] = static_cast<int64_t>(ei);
        } else {
          uf[find(static_cast<size_t>(owner[v]))] = find(ei);
        }
      }
    }
    std::map<size_t, std::vector<VertexId>> comp_vertices;
    for (VertexId v = 0; v < g.num_vertices; ++v) {
      if (owner[v] >= 0) comp_vertices[find(static_cast<size_t>(owner[v]))].push_back(v);
    }
    for (auto& [root, vs] : comp_vertices) {
      // merged order = mode-p coordinate, normalized to a contiguous range
      std::map<int64_t, std::vector<VertexId>> by_idx;
      for (VertexId v : vs) by_idx[rep.coords[v][p]].push_back(v);
      Edge merged;
      int64_t prev = 0;
      bool first = true;
      for (auto& [idx, cls] : by_idx) {
        if (!first && idx != prev + 1) {
          throw structure_error("canonical_representative: merged edge indices not contiguous");
        }
        prev = idx;
        first = false;
        std::sort(cls.begin(), cls.end());
        merged.classes.push_back(std::move(cls));
      }
      out.modes[p].edges.push_back(std::move(merged));
    }
  }
  sort_and_dedup_edges(out);
  // fixed mode order: by smallest contained vertex, then by original name
  std::stable_sort(out.modes.begin(), out.modes.end(), [](const Mode& a, const Mode& b) {
    auto lowest = [](const Mode& m) {
      VertexId lo = UINT32_MAX;
      for (const auto& e : m.edges) {
        for (VertexId v : e.vertices()) lo = std::min(lo, v);
      }
      return lo;
    };
    VertexId la = lowest(a), lb = lowest(b);
    if (la != lb) return la < lb;
    return a.name < b.name;
  });
  return out;
}

Hcc encode_rank3(const Pwohg& g) {
  std::vector<std::string> labels;
  labels.reserve(g.num_vertices);
  for (VertexId v = 0; v < g.num_vertices; ++v) labels.push_back(g.label(v));
  Hcc::Builder b(std::move(labels));
  std::vector<CellId> mode_cells;
  for (const auto& m : g.modes) {
    std::vector<CellId> chain_cells;
    for (const auto& e : m.edges) {
      // suffix unions: classes[i..L), for each i
      std::vector<CellId> suffix;
      for (size_t i = e.classes.size(); i-- > 0;) {
        for (VertexId v : e.classes[i]) suffix.push_back(v);
        std::vector<CellId> children = suffix;
        chain_cells.push_back(b.add_cell(1, std::move(children)));
      }
    }
    mode_cells.push_back(b.add_cell(2, std::move(chain_cells)));
  }
  if (!mode_cells.empty()) b.add_cell(3, std::move(mode_cells));
  return b.build();
}

Pwohg decode_rank3(const Hcc& h) {
  if (h.max_rank() != 3) throw structure_error("decode: expected a rank-3 complex");
  std::vector<CellId> tensors = h.level(3);
  if (tensors.size() != 1) throw structure_error("decode: expected exactly one 3-cell");
  const Hcc::Cell& s3 = h.cell(tensors[0]);

  Pwohg g;
  g.num_vertices = static_cast<uint32_t>(h.elements().size());
  g.labels = h.elements();

  // gather the 1-cells of the whole tensor and find the subset-maximal ones
  std::vector<CellId> all1 = h.restrict_to(tensors[0], 1);
  auto vertex_set = [&](CellId c) {
    std::vector<CellId> vs = h.restrict_to(c, 0);
    return std::set<CellId>(vs.begin(), vs.end());
  };
  std::map<CellId, std::set<CellId>> members;
  for (CellId c : all1) members[c] = vertex_set(c);
  auto is_strict_subset = [](const std::set<CellId>& a, const std::set<CellId>& b) {
    if (a.size() >= b.size()) return false;
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  };
  std::set<CellId> maximal;
  for (CellId c : all1) {
    bool dominated = false;
    for (CellId d : all1) {
      if (d != c && is_strict_subset(members[c], members[d])) {
        dominated = true;
        break;
      }
    }
    if (!dominated) maximal.insert(c);
  }

  // the 2-cells must partition the maximal 1-cells
  std::set<CellId> claimed;
  for (CellId mc : s3.children) {
    for (CellId c : h.cell(mc).children) {
      if (maximal.count(c)) {
        if (!claimed.insert(c).second) {
          throw structure_error("decode: maximal 1-cell claimed by two modes");
        }
      }
    }
  }
  if (claimed != maximal) {
    throw structure_error("decode: modes do not partition the maximal 1-cells");
  }

  // per mode, recover each maximal edge's weak order by counting the strict
  // subsets (within the mode) of the edge that contain each vertex
  size_t mode_no = 0;
  for (CellId mc : s3.children) {
    Mode mode;
    mode.name = "m" + std::to_string(mode_no++);
    const auto& mode_members = h.cell(mc).children;
    for (CellId ec : mode_members) {
      if (!maximal.count(ec)) continue;
      const std::set<CellId>& evs = members[ec];
      std::map<int64_t, std::vector<VertexId>> by_index;
      for (CellId v : evs) {
        int64_t count = 0;
        for (CellId sc : mode_members) {
          if (sc == ec) continue;
          const auto& svs = members[sc];
          if (svs.count(v) && is_strict_subset(svs, evs)) ++count;
        }
        by_index[count].push_back(static_cast<VertexId>(v));
      }
      // chain counts must be contiguous from 0, and the chain cells must be
      // exactly the suffix unions they claim to be
      Edge e;
      int64_t expect = 0;
      for (auto& [idx, cls] : by_index) {
        if (idx != expect++) {
          throw structure_error("decode: chain cells do not define a unique order");
        }
        std::sort(cls.begin(), cls.end());
        e.classes.push_back(std::move(cls));
      }
      for (CellId sc : mode_members) {
        if (sc == ec || !is_strict_subset(members[sc], evs)) continue;
        // a chain cell must be a union of trailing classes
        size_t sz = members[sc].size();
        size_t acc = 0;
        bool ok = false;
        std::set<CellId> suffix;
        for (size_t i = e.classes.size(); i-- > 0;) {
          for (VertexId v : e.classes[i]) suffix.insert(v);
          acc += e.classes[i].size();
          if (acc == sz) {
            ok = suffix == members[sc];
            break;
          }
          if (acc > sz) break;
        }
        if (!ok) throw structure_error("decode: 1-cell is not a suffix of its edge's order");
      }
      mode.edges.push_back(std::move(e));
    }
    g.modes.push_back(std::move(mode));
  }

  // intersections of 1-cells within a mode must be empty or subset-minimal
  for (const auto& m : g.modes) {
    for (size_t i = 0; i < m.edges.size(); ++i) {
      for (size_t j = i + 1; j < m.edges.size(); ++j) {
        std::vector<VertexId> vi = m.edges[i].vertices();
        std::vector<VertexId> vj = m.edges[j].vertices();
        std::sort(vi.begin(), vi.end());
        std::sort(vj.begin(), vj.end());
        std::vector<VertexId> both;
        std::set_intersection(vi.begin(), vi.end(), vj.begin(), vj.end(),
                              std::back_inserter(both));
        if (both.size() > 1) {
          throw structure_error("decode: maximal edges of one mode overlap beyond a point");
        }
      }
    }
  }
  return g;
}

GenTensor gt_from_mda(const Mda& m) {
  if (!m.is_dense()) throw structure_error("gt_from_mda: array must be dense");
  if (m.is_hyper()) throw structure_error("gt_from_mda: array must not be hyper");
  // injectivity on bit patterns
  {
    std::vector<double> vals = m.raw_values();
    std::sort(vals.begin(), vals.end());
    for (size_t i = 1; i < vals.size(); ++i) {
      if (vals[i] == vals[i - 1]) {
        throw structure_error("gt_from_mda: duplicate values; represent via a mode map");
      }
    }
  }
  GenTensor gt;
  Pwohg& g = gt.graph;
  g.num_vertices = static_cast<uint32_t>(m.volume());
  g.values = m.raw_values();
  const Shape& s = m.shape();
  const size_t O = s.order();
  for (size_t p = 0; p < O; ++p) {
    Mode mode;
    mode.name = "m" + std::to_string(p);
    // one edge per line along mode p
    std::vector<size_t> outer;
    for (size_t q = 0; q < O; ++q) {
      if (q != p) outer.push_back(q);
    }
    Shape os;
    for (size_t q : outer) os.dims.push_back(s.dims[q]);
    std::vector<int64_t> oc, full(O);
    for (int64_t f = 0; f < os.volume(); ++f) {
      unflatten(os, f, oc);
      for (size_t i = 0; i < outer.size(); ++i) full[outer[i]] = oc[i];
      Edge e;
      for (int64_t k = 0; k < s.dims[p]; ++k) {
        full[p] = k;
        e.classes.push_back({static_cast<VertexId>(flat_index(s, full))});
      }
      mode.edges.push_back(std::move(e));
    }
    g.modes.push_back(std::move(mode));
  }
  if (O == 0) {
    // a scalar still needs one mode so the element lies in a transversal
    Mode mode;
    mode.name = "m0";
    mode.edges.push_back(Edge{{{0}}});
    g.modes.push_back(std::move(mode));
  }
  return gt;
}

Mda mda_from_gt(const GenTensor& gt, const GtToMdaOptions& opts) {
  Pwohg canon = canonical_representative(gt.graph);
  SoccReport rep = check_socc(canon);
  const size_t P = canon.modes.size();
  // offsets so coordinates start at 0
  std::vector<int64_t> lo(P, INT64_MAX), hi(P, INT64_MIN);
  for (VertexId v = 0; v < canon.num_vertices; ++v) {
    for (size_t p = 0; p < P; ++p) {
      lo[p] = std::min(lo[p], rep.coords[v][p]);
      hi[p] = std::max(hi[p], rep.coords[v][p]);
    }
  }
  Shape shape;
  for (size_t p = 0; p < P; ++p) shape.dims.push_back(hi[p] - lo[p] + 1);
  if (opts.strict) {
    for (const auto& m : canon.modes) {
      for (const auto& e : m.edges) {
        if (static_cast<int64_t>(e.length()) != shape.dims[&m - canon.modes.data()]) {
          throw structure_error("mda_from_gt: unequal edge lengths (jagged result)");
        }
      }
    }
  }
  if (canon.values.size() != canon.num_vertices) {
    throw structure_error("mda_from_gt: tensor carries no element values");
  }
  std::vector<int64_t> occupied(static_cast<size_t>(shape.volume()), -1);
  std::vector<int64_t> c(P);
  for (VertexId v = 0; v < canon.num_vertices; ++v) {
    for (size_t p = 0; p < P; ++p) c[p] = rep.coords[v][p] - lo[p];
    int64_t f = flat_index(shape, c);
    if (occupied[static_cast<size_t>(f)] >= 0) {
      throw structure_error("mda_from_gt: two elements share a multi-index (hyper tensor)");
    }
    occupied[static_cast<size_t>(f)] = static_cast<int64_t>(v);
  }
  std::vector<bool> mask(static_cast<size_t>(shape.volume()));
  std::vector<double> data;
  bool dense = true;
  for (size_t i = 0; i < occupied.size(); ++i) {
    mask[i] = occupied[i] >= 0;
    if (mask[i]) {
      data.push_back(canon.values[static_cast<size_t>(occupied[i])]);
    } else {
      dense = false;
    }
  }
  if (dense) return Mda::dense(std::move(shape), std::move(data));
  return Mda::jagged(std::move(shape), mask, std::move(data));
}

}  // namespace hct
