#pragma once

// Shared helpers for the test suites: random valid operations and operands,
// plus small builders for the named operations.

#include <vector>

#include "hct/mda.hpp"
#include "hct/ops.hpp"
#include "hct/rng.hpp"

namespace hct::testing {

// cols [n, d (contracted), m]
inline Tom matmul_tom(int64_t n, int64_t d, int64_t m, const std::string& base = "mul_add") {
  Tom t;
  t.arity = 2;
  t.cols = 3;
  t.incidence = {{1, 1, 0}, {0, 1, 1}};
  t.contracted = {false, true, false};
  t.operand_shapes = {Shape{{n, d}}, Shape{{d, m}}};
  t.base_ops = base;
  return t;
}

// Y[p,q,r] = sum_i X1[i,p,q] X2[i,p,r] X3[i,q,r]; cols [i, p, q, r]
inline Tom cone_tom(int64_t n, int64_t p, int64_t q, int64_t r) {
  Tom t;
  t.arity = 3;
  t.cols = 4;
  t.incidence = {{1, 1, 1, 0}, {1, 1, 0, 1}, {1, 0, 1, 1}};
  t.contracted = {true, false, false, false};
  t.operand_shapes = {Shape{{n, p, q}}, Shape{{n, p, r}}, Shape{{n, q, r}}};
  return t;
}

// Y[i,j,k] = sum_{p,q,r} X1[i,j,p] X2[p,q,r] X3[q,r,k]; cols [i, j, p, q, r, k]
inline Tom fish_tom(int64_t i, int64_t j, int64_t p, int64_t q, int64_t r, int64_t k) {
  Tom t;
  t.arity = 3;
  t.cols = 6;
  t.incidence = {{1, 1, 1, 0, 0, 0}, {0, 0, 1, 1, 1, 0}, {0, 0, 0, 1, 1, 1}};
  t.contracted = {false, false, true, true, true, false};
  t.operand_shapes = {Shape{{i, j, p}}, Shape{{p, q, r}}, Shape{{q, r, k}}};
  return t;
}

// random valid operation: arity <= max_arity, columns <= max_cols, coupled
// sizes consistent by construction
inline Tom random_tom(Rng& rng, size_t max_arity = 4, size_t max_cols = 6, int64_t max_dim = 4) {
  for (;;) {
    size_t arity = 1 + rng.below(max_arity);
    struct Col {
      int64_t size;
      std::vector<size_t> rows;
      bool contracted;
    };
    std::vector<Col> cols;
    std::vector<std::vector<size_t>> row_cols(arity);
    bool ok = true;
    for (size_t r = 0; r < arity && ok; ++r) {
      size_t order = 1 + rng.below(3);
      for (size_t m = 0; m < order; ++m) {
        std::vector<size_t> cands;
        for (size_t k = 0; k < cols.size(); ++k) {
          bool has = false;
          for (size_t rr : cols[k].rows) has = has || rr == r;
          if (!has) cands.push_back(k);
        }
        if (!cands.empty() && rng.coin()) {
          size_t k = cands[rng.below(cands.size())];
          cols[k].rows.push_back(r);
          row_cols[r].push_back(k);
        } else {
          if (cols.size() >= max_cols) {
            ok = false;
            break;
          }
          cols.push_back(Col{1 + static_cast<int64_t>(rng.below(static_cast<uint64_t>(max_dim))),
                             {r},
                             false});
          row_cols[r].push_back(cols.size() - 1);
        }
      }
    }
    if (!ok) continue;
    size_t out_cols = 0;
    for (auto& c : cols) {
      c.contracted = rng.coin();
      if (!c.contracted) ++out_cols;
    }
    if (out_cols == 0) cols[rng.below(cols.size())].contracted = false;

    Tom t;
    t.arity = arity;
    t.cols = cols.size();
    t.incidence.assign(arity, std::vector<uint8_t>(cols.size(), 0));
    t.contracted.resize(cols.size());
    for (size_t k = 0; k < cols.size(); ++k) {
      t.contracted[k] = cols[k].contracted;
      for (size_t r : cols[k].rows) t.incidence[r][k] = 1;
    }
    for (size_t r = 0; r < arity; ++r) {
      std::vector<size_t> mine = row_cols[r];
      std::sort(mine.begin(), mine.end());
      Shape s;
      for (size_t k : mine) s.dims.push_back(cols[k].size);
      t.operand_shapes.push_back(s);
    }
    return t;
  }
}

inline std::vector<Mda> random_dense_operands(Rng& rng, const Tom& t, double lo = -2,
                                              double hi = 2) {
  std::vector<Mda> out;
  for (const Shape& s : t.operand_shapes) {
    std::vector<double> v(static_cast<size_t>(s.volume()));
    for (auto& x : v) x = rng.uniform(lo, hi);
    out.push_back(Mda::dense(s, std::move(v)));
  }
  return out;
}

inline double max_abs_diff(const Mda& a, const Mda& b) {
  if (a.shape() != b.shape()) return 1e300;
  double worst = 0;
  for (int64_t i = 0; i < a.volume(); ++i) {
    if (a.present(i) != b.present(i)) return 1e300;
    if (!a.present(i)) continue;
    double d = a.scalar(i) - b.scalar(i);
    worst = std::max(worst, d < 0 ? -d : d);
  }
  return worst;
}

inline double max_rel_diff(const Mda& a, const Mda& b) {
  if (a.shape() != b.shape()) return 1e300;
  double worst = 0;
  for (int64_t i = 0; i < a.volume(); ++i) {
    if (a.present(i) != b.present(i)) return 1e300;
    if (!a.present(i)) continue;
    double d = a.scalar(i) - b.scalar(i);
    if (d < 0) d = -d;
    double den = std::max(1.0, std::max(std::fabs(a.scalar(i)), std::fabs(b.scalar(i))));
    worst = std::max(worst, d / den);
  }
  return worst;
}

}  // namespace hct::testing
