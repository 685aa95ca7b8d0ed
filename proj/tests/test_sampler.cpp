#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hct/sampler.hpp"
#include "support.hpp"

using namespace hct;

namespace {

bool within(int64_t v, int64_t lo, int64_t hi) { return lo <= v && v <= hi; }

void check_constraints(const Architecture& a, const SampleConstraints& c) {
  ComplexitySignature sig = signature(a);
  CHECK(within(sig.c_op, c.c_op_min, c.c_op_max));
  CHECK(within(sig.c_t, c.c_t_min, c.c_t_max));
  CHECK(within(sig.c_alpha, c.c_alpha_min, c.c_alpha_max));
  CHECK(within(sig.c_a, c.c_a_min, c.c_a_max));
  CHECK(sig.c_o <= c.c_o_max);
  CHECK(validate_tem(a).ok);
}

}  // namespace

TEST_CASE("a sampled block is valid and inside the ranges") {
  SampleConstraints c;
  Architecture a = sample_architecture(c, 1);
  check_constraints(a, c);
  // the block consumes its input
  bool uses_input = false;
  for (const auto& r : a.rows) {
    if (!r.is_op()) continue;
    for (const auto& n : r.op().inputs) uses_input = uses_input || n == "X";
  }
  CHECK(uses_input);
}

TEST_CASE("degenerate ranges give chains of binary operations") {
  SampleConstraints c;
  c.c_op_min = c.c_op_max = 2;
  c.c_alpha_min = c.c_alpha_max = 2;
  c.c_t_min = 4;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Architecture a = sample_architecture(c, seed);
    for (const auto& r : a.rows) {
      if (r.is_op()) CHECK(r.op().tom.arity == 2);
    }
    ComplexitySignature sig = signature(a);
    CHECK(sig.c_op == 2);
    CHECK(sig.c_alpha == 2);
  }
}

TEST_CASE("sampling is deterministic in the seed") {
  SampleConstraints c;
  Architecture a = insert_activations(sample_architecture(c, 42), 42);
  Architecture b = insert_activations(sample_architecture(c, 42), 42);
  CHECK(a.to_json() == b.to_json());
  Architecture d = insert_activations(sample_architecture(c, 43), 43);
  CHECK(a.to_json() != d.to_json());
}

TEST_CASE("a hundred seeds sample, validate and run forward") {
  SampleConstraints c;
  for (uint64_t seed = 100; seed < 200; ++seed) {
    Architecture a = insert_activations(sample_architecture(c, seed), seed);
    check_constraints(a, c);
    // seeded forward shape check
    std::vector<double> xv(static_cast<size_t>(c.input.volume()));
    Rng rng(seed);
    for (auto& v : xv) v = rng.uniform(-1, 1);
    std::map<std::string, Mda> inputs = {{"X", Mda::dense(c.input, xv)}};
    auto outs = forward(a, inputs, seeded_weights(a, seed));
    REQUIRE(outs.size() == 1);
    for (const auto& [name, value] : outs) {
      const TensorDecl* t = a.find_tensor(name);
      REQUIRE(t != nullptr);
      CHECK(value.shape() == t->shape);
      for (int64_t i = 0; i < value.volume(); ++i) {
        if (value.present(i)) CHECK(std::isfinite(value.scalar(i)));
      }
    }
  }
}

TEST_CASE("activation policy hits the stated proportions") {
  SampleConstraints c;
  int64_t none = 0, one = 0, two = 0, rows = 0;
  for (uint64_t seed = 0; rows < 10000; ++seed) {
    Architecture plain = sample_architecture(c, seed);
    Architecture acted = insert_activations(plain, seed);
    // count activation rows per op row output
    std::map<std::string, int> acts;
    for (const auto& r : acted.rows) {
      if (!r.is_act()) continue;
      std::string base = r.act().output.substr(0, r.act().output.find("_a"));
      acts[base]++;
    }
    for (const auto& r : acted.rows) {
      if (!r.is_op()) continue;
      ++rows;
      int n = acts.count(r.op().output) ? acts[r.op().output] : 0;
      if (n == 0) ++none;
      if (n == 1) ++one;
      if (n == 2) ++two;
    }
  }
  // binomial three-sigma bands around (0.5, 0.25, 0.25)
  double n = static_cast<double>(rows);
  CHECK(std::fabs(static_cast<double>(none) / n - 0.5) <= 3 * std::sqrt(0.25 / n));
  CHECK(std::fabs(static_cast<double>(one) / n - 0.25) <= 3 * std::sqrt(0.1875 / n));
  CHECK(std::fabs(static_cast<double>(two) / n - 0.25) <= 3 * std::sqrt(0.1875 / n));
}

TEST_CASE("activations rewire consumers and keep the block valid") {
  SampleConstraints c;
  for (uint64_t seed = 300; seed < 340; ++seed) {
    Architecture a = insert_activations(sample_architecture(c, seed), seed);
    CHECK(validate_tem(a).ok);
    // axis-bearing activations carry a mode of their input
    for (const auto& r : a.rows) {
      if (!r.is_act()) continue;
      if (r.act().fn == "layer_norm" || r.act().fn == "softmax") {
        REQUIRE(r.act().axes.size() == 1);
        const TensorDecl* t = a.find_tensor(r.act().input);
        CHECK(r.act().axes[0] < t->shape.order());
      }
    }
    // signature is untouched by activations
    CHECK(signature(a) == signature(sample_architecture(c, seed)));
  }
}

TEST_CASE("impossible constraints exhaust the budget with a timeout error") {
  SampleConstraints c;
  c.c_o_max = 2;  // the order-3 input cannot fit in two columns
  c.tom_budget = 50;
  c.block_budget = 2;
  CHECK_THROWS_AS(sample_architecture(c, 1), sampling_error);
}

TEST_CASE("an architecture with no operation rows is unchanged") {
  Architecture a;
  a.tensors = {TensorDecl{"X", "input", Shape{{2}}, false},
               TensorDecl{"Y", "output", Shape{{2}}, false}};
  Row r;
  ModeMap id = permute(Shape{{2}}, {0});
  r.body = MapRow{id, "X", "Y"};
  a.rows = {r};
  Architecture b = insert_activations(a, 5);
  CHECK(b.to_json() == a.to_json());
}

TEST_CASE("emit_dataset writes records plus a manifest and re-loads") {
  std::string dir = (std::filesystem::temp_directory_path() / "hct_ds_test").string();
  std::filesystem::remove_all(dir);
  SampleConstraints c;
  DatasetManifest m = emit_dataset(100, c, 9000, dir);
  CHECK(m.records.size() + m.skipped.size() == 100);
  CHECK(std::filesystem::exists(std::filesystem::path(dir) / "manifest.json"));
  for (const auto& rec : m.records) {
    std::ifstream is(std::filesystem::path(dir) / rec.file, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream ss;
    ss << is.rdbuf();
    Architecture a = Architecture::from_json(ss.str());
    CHECK(validate_tem(a).ok);
    CHECK(signature(a) == rec.sig);
    CHECK(parameter_count(a) == rec.params);
  }
  // byte-identical under the same seed
  std::string dir2 = (std::filesystem::temp_directory_path() / "hct_ds_test2").string();
  std::filesystem::remove_all(dir2);
  emit_dataset(100, c, 9000, dir2);
  for (const auto& rec : m.records) {
    std::ifstream a(std::filesystem::path(dir) / rec.file, std::ios::binary);
    std::ifstream b(std::filesystem::path(dir2) / rec.file, std::ios::binary);
    std::ostringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}
