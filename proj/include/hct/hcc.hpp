#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hct/error.hpp"

namespace hct {

using CellId = uint32_t;

// Ranked set hierarchy: every rank-k cell is a set of rank-(k-1) cells, and
// rank-0 cells wrap single elements. Cells are hash-consed on construction so
// two structurally equal cells always share one id.
class Hcc {
 public:
  static constexpr int kMaxRank = 5;

  struct Cell {
    int rank = 0;
    std::vector<CellId> children;  // sorted, deduplicated; element ids for rank 0
  };

  class Builder;

  const std::vector<std::string>& elements() const { return elements_; }
  const Cell& cell(CellId id) const { return cells_[id]; }
  size_t num_cells() const { return cells_.size(); }
  int rank(CellId id) const { return cells_[id].rank; }
  int max_rank() const { return max_rank_; }

  // All cells at a given rank, ascending by id.
  std::vector<CellId> level(int rank) const;

  // The level-cells reachable by descending containment from `cell`,
  // ascending by id. Requires level < rank(cell).
  std::vector<CellId> restrict_to(CellId cell, int level) const;

  std::string to_json() const;
  static Hcc from_json(const std::string& text);

 private:
  friend class Builder;
  std::vector<std::string> elements_;
  std::vector<Cell> cells_;
  int max_rank_ = 0;
};

class Hcc::Builder {
 public:
  explicit Builder(std::vector<std::string> element_labels);

  // Number of elements; rank-0 cells have ids [0, num_elements).
  size_t num_elements() const { return complex_.elements_.size(); }

  // children must all have rank exactly rank-1 and must be non-empty.
  CellId add_cell(int rank, std::vector<CellId> children);

  Hcc build() { return std::move(complex_); }

 private:
  Hcc complex_;
  std::unordered_map<std::string, CellId> interned_;
};

// True iff `parts` are pairwise disjoint and their union equals `universe`.
// The empty partition over the empty universe is valid.
bool is_partition(const std::vector<std::vector<CellId>>& parts,
                  const std::vector<CellId>& universe);

// Every selection of exactly one member per part; count is the product of
// part sizes. An empty part is a degenerate partition and throws.
class Transversals {
 public:
  explicit Transversals(std::vector<std::vector<CellId>> parts);

  uint64_t count() const;
  bool next(std::vector<CellId>& out);  // false once exhausted
  void reset() {
    cursor_.assign(parts_.size(), 0);
    exhausted_ = false;
  }

  std::vector<std::vector<CellId>> all();

 private:
  std::vector<std::vector<CellId>> parts_;
  std::vector<size_t> cursor_;
  bool exhausted_ = false;
};

}  // namespace hct
