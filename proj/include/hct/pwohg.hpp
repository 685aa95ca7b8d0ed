#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hct/hcc.hpp"
#include "hct/mda.hpp"

namespace hct {

using VertexId = uint32_t;

// One hyper-edge carrying a strict weak order, written as its index classes:
// classes[0] < classes[1] < ...; vertices inside one class are incomparable.
struct Edge {
  std::vector<std::vector<VertexId>> classes;

  size_t length() const { return classes.size(); }
  bool contains(VertexId v) const;
  // 0-based index of v within the order; -1 when absent.
  int64_t index_of(VertexId v) const;
  std::vector<VertexId> vertices() const;
  bool operator==(const Edge&) const = default;
};

struct Mode {
  std::string name;
  std::vector<Edge> edges;
  bool operator==(const Mode&) const = default;
};

// Partitioned weakly ordered hypergraph: the graph view of a generalized
// tensor. Element values ride along when the tensor carries data.
struct Pwohg {
  uint32_t num_vertices = 0;
  std::vector<std::string> labels;  // optional, size num_vertices or empty
  std::vector<Mode> modes;
  std::vector<double> values;  // optional, size num_vertices or empty

  std::string label(VertexId v) const;

  std::string to_json() const;
  static Pwohg from_json(const std::string& text);
};

struct PathStep {
  size_t mode;   // mode index
  size_t edge;   // edge index within the mode
  VertexId to;   // next vertex; must co-occur with the previous one in that edge
};

// Signed path distance restricted to one mode.
int64_t path_distance(const Pwohg& g, VertexId start, const std::vector<PathStep>& steps,
                      size_t mode);

// Per-mode distance vector of a path.
std::vector<int64_t> path_distance_vector(const Pwohg& g, VertexId start,
                                          const std::vector<PathStep>& steps);

struct SoccReport {
  bool connected = false;
  bool consistent = false;
  // Per-vertex, per-mode coordinates from an arbitrary origin; only meaningful
  // when connected && consistent.
  std::vector<std::vector<int64_t>> coords;
  // A closed walk with non-zero per-mode distance witnessing inconsistency,
  // as vertex ids in visiting order.
  std::optional<std::vector<VertexId>> witness;

  bool valid() const { return connected && consistent; }
};

// Coordinate BFS from an arbitrary vertex; a revisited vertex with conflicting
// coordinates falsifies the slice-ordering compatibility conditions.
SoccReport check_socc(const Pwohg& g);

// Zero-distance classes of the vertices: the entries of a hyper-tensor.
// Requires a consistent graph.
std::vector<std::vector<VertexId>> tuples(const Pwohg& g);

struct MultiIndexAssignment {
  // tuple -> 1-based multi-index, aligned with tuples() order
  std::vector<std::vector<VertexId>> tuple_sets;
  std::vector<std::vector<int64_t>> indices;
  std::vector<int64_t> offsets;  // per-mode offset that was added
};

// Coordinates as per-mode path distances from the origin vertex's tuple,
// offset so every entry is >= 1.
MultiIndexAssignment assign_multi_indices(const Pwohg& g, VertexId origin);

// Equivalent graph where every zero-distance pair shares an edge in every mode
// and every unit-distance pair shares an edge in its distinguishing mode.
Pwohg maximal_representative(const Pwohg& g);

// Maximal representative with overlapping same-mode edges merged; minimal edge
// count, unique up to mode permutation, idempotent. Requires the strong SOCC
// (all tuples singletons).
Pwohg canonical_representative(const Pwohg& g);

// Compressed rank-3 set-hierarchy encoding: each edge contributes its chain of
// suffix unions, each mode collects the chains of its edges.
Hcc encode_rank3(const Pwohg& g);

// Reconstructs the graph from a rank-3 encoding. Edge orders come from
// counting, per mode, the strict subsets of each maximal 1-cell.
Pwohg decode_rank3(const Hcc& h);

// A generalized tensor: the graph view plus its rank-3 encoding on demand.
struct GenTensor {
  Pwohg graph;

  Hcc rank3() const { return encode_rank3(graph); }
};

// Builds the generalized tensor of a dense injective array (1-slice cells per
// mode). Duplicate values must instead go through a mode map.
GenTensor gt_from_mda(const Mda& m);

struct GtToMdaOptions {
  bool strict = false;  // reject jagged results instead of masking
};

// Reconstructs the value array: canonicalizes, finds the zero element, assigns
// coordinates by per-mode distances. Equal edge lengths give a dense array;
// otherwise the result is jagged (or an error under strict).
Mda mda_from_gt(const GenTensor& g, const GtToMdaOptions& opts = {});

}  // namespace hct
