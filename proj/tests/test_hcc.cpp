#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "hct/hcc.hpp"
#include "hct/pwohg.hpp"
#include "hct/rng.hpp"

using namespace hct;

namespace {

// the 2x2x2 cube with elements A..H as a rank-3 complex
Hcc cube_complex() {
  Pwohg g;
  g.num_vertices = 8;
  g.labels = {"A", "B", "C", "D", "E", "F", "G", "H"};
  g.modes = {
      {"r", {Edge{{{0}, {1}}}, Edge{{{2}, {3}}}, Edge{{{4}, {5}}}, Edge{{{6}, {7}}}}},
      {"g", {Edge{{{0}, {2}}}, Edge{{{1}, {3}}}, Edge{{{4}, {6}}}, Edge{{{5}, {7}}}}},
      {"b", {Edge{{{0}, {4}}}, Edge{{{1}, {5}}}, Edge{{{2}, {6}}}, Edge{{{3}, {7}}}}},
  };
  return encode_rank3(g);
}

}  // namespace

TEST_CASE("construction rejects mixed-rank children") {
  Hcc::Builder b({"A", "B", "C"});
  CellId e1 = b.add_cell(1, {0, 1});
  // a 2-cell may only contain 1-cells; element 2 is a rank-0 cell
  CHECK_THROWS_AS(b.add_cell(2, {e1, 2}), structure_error);
  CHECK_THROWS_AS(b.add_cell(1, {}), structure_error);
  CHECK_THROWS_AS(b.add_cell(6, {e1}), structure_error);
}

TEST_CASE("cells are hash-consed") {
  Hcc::Builder b({"A", "B"});
  CellId e1 = b.add_cell(1, {0, 1});
  CellId e2 = b.add_cell(1, {1, 0});
  CHECK(e1 == e2);
}

TEST_CASE("restrict descends to every level") {
  Hcc h = cube_complex();
  std::vector<CellId> tensors = h.level(3);
  REQUIRE(tensors.size() == 1);

  // the cube reaches all 8 elements
  std::vector<CellId> elems = h.restrict_to(tensors[0], 0);
  CHECK(elems.size() == 8);
  for (CellId i = 0; i < 8; ++i) CHECK(elems[i] == i);

  // a rank-1 cell restricts to its own elements
  for (CellId c = 0; c < h.num_cells(); ++c) {
    if (h.rank(c) == 1 && h.cell(c).children.size() == 2) {
      std::vector<CellId> vs = h.restrict_to(c, 0);
      CHECK(vs == h.cell(c).children);
      break;
    }
  }
  CHECK_THROWS_AS(h.restrict_to(tensors[0], 3), structure_error);
}

TEST_CASE("restrict on a 2x2 matrix sees maximal cells and their chains") {
  Pwohg g;
  g.num_vertices = 4;
  g.modes = {{"rows", {Edge{{{0}, {1}}}, Edge{{{2}, {3}}}}},
             {"cols", {Edge{{{0}, {2}}}, Edge{{{1}, {3}}}}}};
  Hcc h = encode_rank3(g);
  std::vector<CellId> tensors = h.level(3);
  REQUIRE(tensors.size() == 1);
  std::vector<CellId> ones = h.restrict_to(tensors[0], 1);
  // 4 maximal 1-cells plus the order-encoding subsets {B},{C},{D} ({D} shared)
  CHECK(ones.size() == 7);
}

TEST_CASE("restrict is monotone over children") {
  Hcc h = cube_complex();
  CellId top = h.level(3).front();
  for (int level = 0; level < 2; ++level) {
    std::vector<CellId> direct = h.restrict_to(top, level);
    std::set<CellId> via_children;
    for (CellId m : h.cell(top).children) {
      for (CellId c : h.restrict_to(m, level)) via_children.insert(c);
    }
    CHECK(std::vector<CellId>(via_children.begin(), via_children.end()) == direct);
  }
}

TEST_CASE("is_partition") {
  CHECK(is_partition({{0, 1}, {2, 3}}, {0, 1, 2, 3}));
  CHECK_FALSE(is_partition({{0, 1}, {1, 2}}, {0, 1, 2}));
  CHECK(is_partition({}, {}));  // vacuous case
  CHECK_FALSE(is_partition({{0}}, {0, 1}));
}

TEST_CASE("transversals enumerate selections") {
  Transversals t({{0, 1}, {2, 3}});
  auto all = t.all();
  CHECK(all.size() == 4);
  CHECK(std::find(all.begin(), all.end(), std::vector<CellId>{0, 3}) != all.end());
  CHECK(std::find(all.begin(), all.end(), std::vector<CellId>{1, 2}) != all.end());

  Transversals single(std::vector<std::vector<CellId>>{{5}});
  CHECK(single.all() == std::vector<std::vector<CellId>>{{5}});

  Transversals sixes({{0, 1}, {2, 3, 4}});
  CHECK(sixes.count() == 6);
  CHECK(sixes.all().size() == 6);

  std::vector<std::vector<CellId>> degenerate = {{0}, {}};
  CHECK_THROWS_AS(Transversals{degenerate}, structure_error);
}

TEST_CASE("transversal count equals the product of part sizes") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    size_t nparts = 1 + rng.below(4);
    std::vector<std::vector<CellId>> parts;
    CellId next = 0;
    uint64_t expect = 1;
    for (size_t p = 0; p < nparts; ++p) {
      size_t sz = 1 + rng.below(4);
      expect *= sz;
      std::vector<CellId> part;
      for (size_t i = 0; i < sz; ++i) part.push_back(next++);
      parts.push_back(part);
    }
    Transversals t(parts);
    CHECK(t.count() == expect);
    CHECK(t.all().size() == expect);
  }
}

TEST_CASE("complex JSON round-trips") {
  Hcc h = cube_complex();
  std::string s = h.to_json();
  Hcc h2 = Hcc::from_json(s);
  CHECK(h2.to_json() == s);
  CHECK(h2.num_cells() == h.num_cells());
}

TEST_CASE("the complex fixture round-trips byte-identically") {
  std::ifstream is(std::string(HCT_FIXTURES_DIR) + "/cube_hcc.json", std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  Hcc h = Hcc::from_json(ss.str());
  CHECK(h.to_json() + "\n" == ss.str());
}
